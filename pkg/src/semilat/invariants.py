"""Cycle invariants on a regular torus: actions, Maslov indices, subprincipal
integrals, and the Liouville volume of the level set.

The action of a basic cycle is the line integral of xi.dx along the closed
joint-flow orbit; the subprincipal correction is the average of the
subprincipal symbols paired with the period vector; the Maslov index comes
from the det^2 winding in maslov.py.  All three are constant on the torus, so
a base-point spread over several seeds doubles as a consistency check.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, InputError, SamplerStarvationError
from .models import PhasePoint, seed_level_points
from .dynamics import flow_combination
from .maslov import cycle_maslov_index


def cycle_action(sys, p, T, tol_flow=1e-11):
    """Action integral of xi.dx along the cycle of period T through p.

    Returns (action, return_residual); the residual is the distance between
    the endpoint and p, a closure diagnostic for the caller.
    """
    d = 2 * sys.n
    y, _ = flow_combination(sys, T, 1.0, p, tol_flow=tol_flow, with_action=True)
    residual = float(np.linalg.norm(y[:d] - p.z))
    return float(y[d]), residual


def subprincipal_cycle_integral(sys, p, T, tol_flow=1e-11):
    """delta(T) = integral over [0,1] of <q1(Psi^{sT} p), T> ds."""
    if sys.q1_kind == 0:
        return 0.0
    d = 2 * sys.n
    y, _ = flow_combination(sys, T, 1.0, p, tol_flow=tol_flow,
                            with_action=True, with_sub=True)
    return float(y[d + 1])


@dataclass
class CycleInvariants:
    """Per-cycle data for one period basis: alpha_j, mu_j, delta_j."""

    basis: np.ndarray
    alpha: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    return_residuals: np.ndarray
    base_point_spread: float
    n_base_points: int

    def summary(self):
        lines = []
        for j in range(self.basis.shape[1]):
            lines.append(
                f"cycle {j}: T={np.array2string(self.basis[:, j], precision=6)}  "
                f"alpha={self.alpha[j]:.12g}  mu={self.mu[j]}  "
                f"delta={self.delta[j]:.12g}")
        lines.append(f"base-point spread: {self.base_point_spread:.3e} "
                     f"over {self.n_base_points} points")
        return "\n".join(lines)


def compute_cycle_invariants(sys, p, basis, n_frames=512, tol_flow=1e-11,
                             extra_points=(), tol_base=1e-6):
    """Actions, Maslov indices, and subprincipal integrals of the basis cycles.

    extra_points are further points on the same torus; the invariants are
    recomputed there and the worst absolute disagreement is recorded as
    base_point_spread (the tolerance only gates an exception when exceeded).
    """
    basis = np.asarray(basis, dtype=float)
    if basis.shape != (sys.k, sys.k):
        raise InputError("basis must be a k x k matrix of period columns")
    k = sys.k
    alpha = np.empty(k)
    delta = np.empty(k)
    mu = np.empty(k, dtype=int)
    res = np.empty(k)
    for j in range(k):
        T = basis[:, j]
        alpha[j], res[j] = cycle_action(sys, p, T, tol_flow=tol_flow)
        delta[j] = subprincipal_cycle_integral(sys, p, T, tol_flow=tol_flow)
        mu[j] = cycle_maslov_index(sys, p, T, n_frames=n_frames, tol_flow=tol_flow)

    spread = 0.0
    for q in extra_points:
        for j in range(k):
            T = basis[:, j]
            a2, _ = cycle_action(sys, q, T, tol_flow=tol_flow)
            d2 = subprincipal_cycle_integral(sys, q, T, tol_flow=tol_flow)
            m2 = cycle_maslov_index(sys, q, T, n_frames=n_frames, tol_flow=tol_flow)
            spread = max(spread, abs(a2 - alpha[j]), abs(d2 - delta[j]))
            if m2 != mu[j]:
                raise HypothesisViolation(
                    "H'3", f"Maslov index of cycle {j} differs between base "
                    f"points ({mu[j]} vs {m2})")
    if extra_points and spread > tol_base:
        raise HypothesisViolation(
            "H'3", f"cycle invariants vary by {spread:.3e} across base points")
    return CycleInvariants(basis=basis, alpha=alpha, mu=mu, delta=delta,
                           return_residuals=res, base_point_spread=spread,
                           n_base_points=1 + len(extra_points))


def level_bounding_box(sys, E0, rng, n_seeds=64, pad=1.3):
    """Axis-aligned box around Sigma_0 from projected random seeds."""
    pts = seed_level_points(sys, E0, n_seeds, rng)
    Z = np.array([p.z for p in pts])
    lo = Z.min(axis=0)
    hi = Z.max(axis=0)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    half = np.maximum(half, 1e-3 * np.max(half)) * pad
    return mid - half, mid + half


@dataclass
class VolumeEstimate:
    """Thin-shell Monte Carlo estimate of the Liouville volume of Sigma_0."""

    value: float
    stderr: float
    eps: float
    n_samples: int
    n_hits: int
    coarse_value: float
    richardson_drift: float
    box_lo: np.ndarray = field(repr=False, default=None)
    box_hi: np.ndarray = field(repr=False, default=None)


def _shell_fraction(sys, E0, eps, lo, hi, n_samples, rng, batch=200_000):
    hits = 0
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        Z = rng.uniform(lo, hi, size=(m, len(lo)))
        q = sys.q0_batch(Z)
        inside = np.all(np.abs(q - E0) < eps, axis=1)
        hits += int(np.count_nonzero(inside))
        done += m
    return hits


def liouville_volume(sys, E0, eps=None, n_samples=2_000_000, seed=0,
                     box=None, min_hits=200):
    """Monte Carlo volume of Sigma_0 = q0^-1(E0) with a Richardson check.

    Samples uniformly in a bounding box and counts the fraction landing in
    the shell |q0 - E0| < eps componentwise; the volume of the shell divided
    by (2 eps)^k converges to the Liouville volume as eps -> 0.  The same
    count is taken at eps and eps/2; their difference is reported as
    richardson_drift and the eps/2 estimate is the returned value.
    """
    E0 = np.atleast_1d(np.asarray(E0, dtype=float))
    if E0.size != sys.k:
        raise InputError("E0 must have length k")
    rng = np.random.default_rng(seed)
    if eps is None:
        eps = 0.02 * max(1.0, float(np.max(np.abs(E0))))
    if box is None:
        lo, hi = level_bounding_box(sys, E0, rng)
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
    vol_box = float(np.prod(hi - lo))

    hits_c = _shell_fraction(sys, E0, eps, lo, hi, n_samples, rng)
    hits_f = _shell_fraction(sys, E0, eps / 2, lo, hi, n_samples, rng)
    if hits_f < min_hits:
        raise SamplerStarvationError(
            f"only {hits_f} shell hits at eps={eps / 2:.3g}; enlarge eps or "
            "n_samples, or tighten the box")
    frac_f = hits_f / n_samples
    frac_c = hits_c / n_samples
    val_f = vol_box * frac_f / (2 * eps / 2) ** sys.k
    val_c = vol_box * frac_c / (2 * eps) ** sys.k
    stderr = vol_box * np.sqrt(frac_f * (1 - frac_f) / n_samples) / eps ** sys.k
    return VolumeEstimate(value=float(val_f), stderr=float(stderr), eps=float(eps / 2),
                          n_samples=n_samples, n_hits=hits_f,
                          coarse_value=float(val_c),
                          richardson_drift=float(abs(val_f - val_c)),
                          box_lo=lo, box_hi=hi)


def density_constant(sys, volume, det_a):
    """l0 = (2 pi)^-n (Liouville volume) / |det a|, the multiplicity density."""
    return float(volume / ((2 * np.pi) ** sys.n * abs(det_a)))


def surface_gram_factor(sys, points):
    """sqrt(det(G)) with G the Gram matrix of the symbol gradients.

    Diagnostic weight relating the shell indicator to the surface measure on
    Sigma_0; not needed for the volume estimate itself.
    """
    Z = np.array([p.z if isinstance(p, PhasePoint) else np.asarray(p) for p in points])
    G = sys.grad_q0_batch(Z)
    out = np.empty(len(points))
    for i in range(len(points)):
        g = G[i]
        out[i] = np.sqrt(np.linalg.det(g @ g.T))
    return out
