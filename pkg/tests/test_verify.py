import numpy as np
import pytest

from semilat.errors import InputError, WindowOverlapError
from semilat.lattice import LatticeSpec
from semilat.verify import (MatchReport, fit_deviation_scaling, match_spectrum,
                            multiplicity_profile)


@pytest.fixture
def ho1d_spec():
    return LatticeSpec(e0=np.array([0.5]), a=np.array([[1.0]]),
                       alpha=np.array([np.pi]), mu=np.array([2]),
                       delta=np.zeros(1))


def _report(h, dev):
    return MatchReport(h=h, pairs=[(np.array([0.0]), None, dev)],
                       unmatched_spectrum=np.empty((0, 1)),
                       unmatched_lattice=[], reject_radius=1.0)


def test_exact_spectrum_all_matched(ho1d_spec):
    h = 0.1
    pts = np.array([[h * (i + 0.5)] for i in range(10)])
    rep = match_spectrum(ho1d_spec, h, pts, c_reject=0.5)
    assert rep.all_matched
    assert rep.max_deviation < 1e-14
    assert not rep.unmatched_lattice


def test_points_outside_window_ignored(ho1d_spec):
    h = 0.1
    pts = np.array([[0.05], [0.45], [0.95]])  # only 0.45 is within E0 +- 3h
    rep = match_spectrum(ho1d_spec, h, pts, c_reject=0.5)
    assert rep.n_points == 1


def test_far_point_lands_in_unmatched(ho1d_spec):
    h = 0.1
    pts = np.array([[0.55], [0.52]])
    rep = match_spectrum(ho1d_spec, h, pts, reject_radius=0.01)
    assert len(rep.pairs) == 1
    assert len(rep.unmatched_spectrum) == 1


def test_reject_radius_gap_guard(ho1d_spec):
    with pytest.raises(InputError):
        match_spectrum(ho1d_spec, 0.1, np.array([[0.55]]), reject_radius=0.06)


def test_empty_spectrum(ho1d_spec):
    rep = match_spectrum(ho1d_spec, 0.1, np.empty((0, 1)), c_reject=0.5)
    assert rep.pairs == []
    assert len(rep.unmatched_lattice) > 0


def test_scaling_fit_quadratic():
    hs = [0.2, 0.1, 0.05, 0.025]
    fit = fit_deviation_scaling([_report(h, h ** 2) for h in hs])
    assert abs(fit.fitted_exponent - 2.0) < 1e-9
    assert not fit.exact


def test_scaling_fit_linear():
    hs = [0.2, 0.1, 0.05]
    fit = fit_deviation_scaling([_report(h, h) for h in hs])
    assert abs(fit.fitted_exponent - 1.0) < 1e-9


def test_scaling_fit_exact_outcome():
    hs = [0.2, 0.1, 0.05]
    fit = fit_deviation_scaling([_report(h, 1e-14) for h in hs])
    assert fit.exact


def test_scaling_fit_needs_three_points():
    with pytest.raises(InputError):
        fit_deviation_scaling([_report(0.2, 0.1), _report(0.1, 0.05)])


def test_scaling_fit_needs_decreasing_h():
    reports = [_report(h, h ** 2) for h in (0.05, 0.1, 0.2)]
    with pytest.raises(InputError):
        fit_deviation_scaling(reports)


def test_multiplicity_counts(ho1d_spec):
    # two fake eigenvalues inside the cube at 0.45, one at 0.55
    h = 0.1
    pts = np.array([[0.45], [0.45 + 1e-4], [0.55]])
    rep = multiplicity_profile(ho1d_spec, h, pts, C=2.0, l0=2 * h, n=1,
                               window_c=[1.0])
    by_val = dict(zip([round(0.5 + h * (n[0] - 4.5), 6) for n in rep.indices],
                      rep.counts))
    assert by_val.get(0.45) == 2 or 2 in rep.counts
    assert 1 in rep.counts


def test_multiplicity_overlap_guard(ho1d_spec):
    with pytest.raises(WindowOverlapError):
        multiplicity_profile(ho1d_spec, 0.1, np.array([[0.55]]), C=10.0,
                             l0=1.0, n=1)


def test_empty_cube_counts_zero(ho1d_spec):
    rep = multiplicity_profile(ho1d_spec, 0.1, np.empty((0, 1)), C=2.0,
                               l0=1.0, n=2)
    assert np.all(rep.counts == 0)
