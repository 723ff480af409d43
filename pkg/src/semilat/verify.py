"""Comparison of computed joint spectra against the predicted lattice.

Three checks: nearest-point matching with a rejection radius inside the
localization window, a log-log fit of the worst deviation against h (the
localization is O(h^2) so the fitted exponent should approach 2 for generic
models), and cluster multiplicities against the Liouville density constant.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError, WindowOverlapError
from .lattice import enumerate_lattice, min_lattice_gap

DEVIATION_FLOOR = 1e-12


@dataclass
class MatchReport:
    """Nearest-lattice-point assignment of a joint spectrum at one h."""

    h: float
    pairs: list
    unmatched_spectrum: np.ndarray
    unmatched_lattice: list
    reject_radius: float
    window_lo: np.ndarray = field(repr=False, default=None)
    window_hi: np.ndarray = field(repr=False, default=None)

    @property
    def deviations(self):
        return np.array([d for _, _, d in self.pairs])

    @property
    def max_deviation(self):
        return float(np.max(self.deviations)) if self.pairs else 0.0

    @property
    def n_points(self):
        return len(self.pairs) + len(self.unmatched_spectrum)

    @property
    def all_matched(self):
        return len(self.unmatched_spectrum) == 0


def match_spectrum(spec, h, points, reject_radius=None, window_c=None,
                   c_reject=10.0):
    """Match spectrum points to nearest lattice points within the window.

    Only eigenvalues inside the open box E0 +- c h take part, since the
    localization statement holds there; the default rejection radius is
    c_reject * h^2 and is required to stay below half the minimal lattice
    gap so every assignment is unambiguous.  Unmatched items on either side
    are data, not errors.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if window_c is None:
        window_c = spec.window_c
    window_c = np.atleast_1d(np.asarray(window_c, dtype=float))
    lo = spec.e0 - window_c * h
    hi = spec.e0 + window_c * h
    if points.size:
        points = points[np.all((points > lo) & (points < hi), axis=1)]

    if reject_radius is None:
        reject_radius = c_reject * h * h
    gap = min_lattice_gap(spec, h)
    if reject_radius >= 0.5 * gap:
        raise InputError(
            f"reject_radius {reject_radius:.3g} is not below half the "
            f"lattice gap {gap:.3g}")

    # pad the enumeration by the rejection radius so an eigenvalue sitting on
    # the window edge still finds its lattice partner; lattice points count
    # as unmatched only when they lie clear of the edge on the inside
    predicted = enumerate_lattice(spec, h, lo - reject_radius,
                                  hi + reject_radius)
    pairs = []
    hit = np.zeros(len(predicted), dtype=bool)
    if len(points) and predicted:
        targets = np.array([p.value for p in predicted])
        dist, idx = cKDTree(targets).query(points)
        ok = dist <= reject_radius
        for i in np.flatnonzero(ok):
            pairs.append((points[i], predicted[idx[i]], float(dist[i])))
            hit[idx[i]] = True
        unmatched = points[~ok]
    else:
        unmatched = points
    unmatched_lattice = [
        p for p, u in zip(predicted, hit)
        if not u and np.all(p.value > lo + reject_radius)
        and np.all(p.value < hi - reject_radius)]
    return MatchReport(h=float(h), pairs=pairs, unmatched_spectrum=unmatched,
                       unmatched_lattice=unmatched_lattice,
                       reject_radius=float(reject_radius),
                       window_lo=lo, window_hi=hi)


@dataclass
class ScalingFit:
    """Least-squares exponent of max deviation ~ C h^p on log-log axes."""

    h_list: np.ndarray
    max_deviations: np.ndarray
    fitted_exponent: float
    fit_residual: float
    prefactor: float
    exact: bool

    def summary(self):
        if self.exact:
            return "all deviations at numerical floor (exact match)"
        return (f"deviation ~ {self.prefactor:.3g} * h^{self.fitted_exponent:.3f}"
                f" (residual {self.fit_residual:.2e})")


def fit_deviation_scaling(reports, floor=DEVIATION_FLOOR):
    """Fit the per-h worst deviations of a family of match reports.

    Deviations at or below the floor measure the eigensolver rather than the
    localization; they are clamped out of the fit, and if every h lands
    there the outcome is reported as an exact match instead of a fit.
    """
    hs = np.array([r.h for r in reports], dtype=float)
    devs = np.array([r.max_deviation for r in reports], dtype=float)
    if len(hs) < 3:
        raise InputError("need at least 3 values of h")
    if np.any(np.diff(hs) >= 0):
        raise InputError("h grid must be strictly decreasing")
    keep = devs > floor
    if not np.any(keep):
        return ScalingFit(h_list=hs, max_deviations=devs,
                          fitted_exponent=np.nan, fit_residual=0.0,
                          prefactor=0.0, exact=True)
    if np.count_nonzero(keep) < 2:
        raise InputError("fewer than two deviations above the fit floor")
    x = np.log(hs[keep])
    y = np.log(devs[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ScalingFit(h_list=hs[keep], max_deviations=devs[keep],
                      fitted_exponent=float(slope), fit_residual=resid,
                      prefactor=float(np.exp(intercept)), exact=False)


@dataclass
class MultiplicityReport:
    """Eigenvalue counts in size-2Ch^2 cubes around lattice points versus
    the leading-order prediction l0 h^(k-n)."""

    h: float
    indices: list
    counts: np.ndarray
    predicted: float
    l0_estimate: float
    l0_stderr: float
    relative_errors: np.ndarray
    half_width: float

    @property
    def max_rel_error(self):
        return float(np.max(self.relative_errors)) if len(self.counts) else 0.0

    def within(self, rel_tol, n_sigma=3.0):
        """Check against rel_tol with the Monte Carlo 3 sigma slack on l0."""
        slack = rel_tol + n_sigma * self.l0_stderr / abs(self.l0_estimate)
        return self.max_rel_error <= slack


def multiplicity_profile(spec, h, points, C, l0, l0_stderr=0.0, n=None,
                         window_c=None):
    """Count eigenvalues in the cube of half-width C h^2 at each lattice point.

    The counts N_n(h) compare to l0 h^(k-n); relative errors are reported per
    lattice point.  Cubes must not overlap, so C h^2 is checked against half
    the lattice gap.
    """
    if n is None:
        raise InputError("n (configuration dimension) is required")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    half_width = C * h * h
    gap = min_lattice_gap(spec, h)
    if half_width >= 0.5 * gap:
        raise WindowOverlapError(
            f"cluster cubes of half-width {half_width:.3g} overlap at "
            f"lattice gap {gap:.3g}")
    if window_c is None:
        window_c = spec.window_c
    window_c = np.atleast_1d(np.asarray(window_c, dtype=float))
    lo = spec.e0 - window_c * h
    hi = spec.e0 + window_c * h
    predicted = enumerate_lattice(spec, h, lo, hi)
    if not predicted:
        raise InputError("no lattice points in the window")
    counts = np.empty(len(predicted), dtype=int)
    for i, p in enumerate(predicted):
        inside = np.all(np.abs(points - p.value) <= half_width, axis=1)
        counts[i] = int(np.count_nonzero(inside))
    pred = l0 * h ** (spec.k - n)
    rel = np.abs(counts - pred) / abs(pred)
    return MultiplicityReport(h=float(h), indices=[p.n for p in predicted],
                              counts=counts, predicted=float(pred),
                              l0_estimate=float(l0), l0_stderr=float(l0_stderr),
                              relative_errors=rel, half_width=float(half_width))
