"""Semiclassical lattice of predicted joint eigenvalues.

The predicted cluster positions near a regular value E0 form an affine
lattice: with A the matrix whose columns are the basic periods divided by
2 pi, the point with index n in Z^k sits at

    E(n) = E0 + A^{-T} v(n),
    v_j(n) = (delta_j / 2pi - mu_j / 4) h - alpha_j / 2pi + h n_j.

The inverse transpose enters because the invariants are measured along the
period basis cycles, i.e. componentwise against the columns of A.  The 1d
oscillator (lattice h(Z + 1/2)) and the angular-momentum axis of central
models (exact multiples of h) pin the convention.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of the predicted lattice: base value, period matrix, and the
    per-cycle invariants alpha (actions), mu (Maslov), delta (subprincipal)."""

    e0: np.ndarray
    a: np.ndarray
    alpha: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    window_c: np.ndarray = None

    def __post_init__(self):
        k = self.e0.size
        if self.window_c is None:
            object.__setattr__(self, "window_c", np.full(k, 3.0))
        if self.a.shape != (k, k):
            raise InputError("period matrix must be k x k")
        if abs(np.linalg.det(self.a)) < 1e-12:
            raise InputError("singular period matrix")
        for arr in (self.alpha, self.mu, self.delta):
            if arr.shape != (k,):
                raise InputError("invariant vectors must have length k")

    @property
    def k(self):
        return self.e0.size

    @property
    def det_a(self):
        return float(np.linalg.det(self.a))

    def offset(self, h):
        """v-coordinates of the n = 0 point at Planck parameter h."""
        return (self.delta / (2 * np.pi) - self.mu / 4.0) * h - self.alpha / (2 * np.pi)

    def point(self, n, h):
        """Predicted value at integer index n."""
        n = np.asarray(n, dtype=float)
        return self.e0 + np.linalg.solve(self.a.T, self.offset(h) + h * n)

    def index_coordinates(self, values, h):
        """Real-valued lattice indices of given points (inverse of point)."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        v = (values - self.e0) @ self.a
        return (v - self.offset(h)) / h

    def to_dict(self):
        return {
            "e0": self.e0.tolist(),
            "a": self.a.tolist(),
            "alpha": self.alpha.tolist(),
            "mu": [int(m) for m in self.mu],
            "delta": self.delta.tolist(),
            "window_c": self.window_c.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        wc = d.get("window_c")
        return cls(e0=np.asarray(d["e0"], dtype=float),
                   a=np.asarray(d["a"], dtype=float),
                   alpha=np.asarray(d["alpha"], dtype=float),
                   mu=np.asarray(d["mu"], dtype=int),
                   delta=np.asarray(d["delta"], dtype=float),
                   window_c=None if wc is None else np.asarray(wc, dtype=float))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def build_lattice_spec(e0, basis, invariants, window_c=None):
    """Assemble the lattice geometry from a period basis and its invariants."""
    e0 = np.atleast_1d(np.asarray(e0, dtype=float))
    basis = np.asarray(basis, dtype=float)
    if window_c is not None:
        window_c = np.atleast_1d(np.asarray(window_c, dtype=float))
    return LatticeSpec(e0=e0, a=basis / (2 * np.pi),
                       alpha=np.asarray(invariants.alpha, dtype=float),
                       mu=np.asarray(invariants.mu, dtype=int),
                       delta=np.asarray(invariants.delta, dtype=float),
                       window_c=window_c)


@dataclass(frozen=True)
class PredictedPoint:
    """One lattice point: the integer index and the predicted joint value."""

    n: tuple
    value: np.ndarray


def enumerate_lattice(spec, h, window_lo, window_hi):
    """All lattice points whose values land in the window box.

    The window corners are mapped to index space; the integer bounding box is
    enumerated and filtered back in value space, so no point is missed even
    for a badly skewed period matrix.
    """
    lo = np.atleast_1d(np.asarray(window_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(window_hi, dtype=float))
    k = spec.k
    if lo.size != k or hi.size != k:
        raise InputError("window bounds must have length k")
    if np.any(hi <= lo):
        raise InputError("empty window")

    corners = np.array(np.meshgrid(*[[lo[i], hi[i]] for i in range(k)],
                                   indexing="ij")).reshape(k, -1).T
    idx = spec.index_coordinates(corners, h)
    n_lo = np.floor(idx.min(axis=0)).astype(int) - 1
    n_hi = np.ceil(idx.max(axis=0)).astype(int) + 1

    grids = np.meshgrid(*[np.arange(n_lo[i], n_hi[i] + 1) for i in range(k)],
                        indexing="ij")
    N = np.stack([g.ravel() for g in grids], axis=1)
    vals = spec.e0 + np.linalg.solve(
        spec.a.T, (spec.offset(h)[:, None] + h * N.T)).T
    keep = np.all((vals >= lo) & (vals <= hi), axis=1)
    return [PredictedPoint(n=tuple(int(m) for m in N[i]), value=vals[i])
            for i in np.flatnonzero(keep)]


def min_lattice_gap(spec, h):
    """Shortest distance between distinct lattice points at parameter h."""
    k = spec.k
    G = np.linalg.inv(spec.a.T) * h
    rng = range(-2, 3)
    grids = np.meshgrid(*[list(rng) for _ in range(k)], indexing="ij")
    N = np.stack([g.ravel() for g in grids], axis=1)
    N = N[np.any(N != 0, axis=1)]
    return float(np.min(np.linalg.norm(N @ G.T, axis=1)))
