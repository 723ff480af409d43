import numpy as np
import pytest

from semilat.errors import NoPeriodError
from semilat.models import make_system, seed_level_points
from semilat.periods import (detect_period_lattice, is_period, reduce_basis,
                             unimodular_transform)


def test_ho1d_period_is_2pi(ho1d, ho1d_point):
    lat = detect_period_lattice(ho1d, ho1d_point)
    assert lat.basis.shape == (1, 1)
    assert abs(abs(lat.basis[0, 0]) - 2 * np.pi) < 1e-8
    assert np.max(lat.return_residuals) < 1e-8


def test_hl_basis_unimodular_equivalent(hl, hl_point):
    lat = detect_period_lattice(hl, hl_point)
    target = np.array([[np.pi, np.pi], [np.pi, -np.pi]])
    X = unimodular_transform(lat.basis, target)
    assert X is not None
    assert abs(abs(round(np.linalg.det(X))) - 1) == 0


def test_central_quartic_basis(central, central_point):
    lat = detect_period_lattice(central, central_point)
    assert lat.basis.shape == (2, 2)
    assert np.max(lat.return_residuals) < 1e-8
    # the pure rotation by 2 pi is in the lattice
    coeffs = np.linalg.solve(lat.basis, [0.0, 2 * np.pi])
    assert np.allclose(coeffs, np.round(coeffs), atol=1e-6)


def test_irrational_frequencies_have_no_period():
    sys = make_system("aniso_ho", params={"omega": np.sqrt(2.0)})
    rng = np.random.default_rng(9)
    p = seed_level_points(sys, [1.0], 1, rng)[0]
    with pytest.raises(NoPeriodError):
        detect_period_lattice(sys, p)


def test_is_period_accepts_and_rejects(ho1d, ho1d_point):
    assert is_period(ho1d, ho1d_point, [2 * np.pi])
    assert is_period(ho1d, ho1d_point, [-4 * np.pi])
    assert not is_period(ho1d, ho1d_point, [np.pi])


def test_detected_periods_close_orbit(central, central_point):
    lat = detect_period_lattice(central, central_point)
    for j in range(2):
        assert is_period(central, central_point, lat.basis[:, j])


def test_reduce_basis_preserves_lattice():
    B = np.array([[2 * np.pi, 2 * np.pi], [0.0, 2 * np.pi]])
    R = reduce_basis(B.copy())
    X = unimodular_transform(B, R)
    assert X is not None
    # reduction never grows the longest generator
    assert np.max(np.linalg.norm(R, axis=0)) <= np.max(np.linalg.norm(B, axis=0)) + 1e-12


def test_unimodular_transform_rejects_different_lattices():
    B1 = np.array([[2 * np.pi, 0.0], [0.0, 2 * np.pi]])
    B2 = np.array([[np.pi, 0.0], [0.0, 2 * np.pi]])
    assert unimodular_transform(B1, B2) is None


def test_basis_change_matrix_halves_of_2pi(hl, hl_point):
    lat = detect_period_lattice(hl, hl_point)
    # every entry of a = basis / 2pi is a multiple of 1/2 for this model
    a = lat.basis / (2 * np.pi)
    assert np.allclose(2 * a, np.round(2 * a), atol=1e-9)
