"""Commuting quantum operators and their joint spectra.

Two discretizations are provided.  Oscillator models get exact matrix
representations in a truncated Hermite basis, where the commutators vanish
identically and every eigenvalue below the truncation threshold is exact.
The central anharmonic model separates in polar coordinates; each angular
momentum sector is a tridiagonal radial problem on a uniform grid, refined
by Richardson extrapolation in the grid spacing.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import DegeneracyError, InputError, TruncationError
from . import kernels


@dataclass
class OperatorSet:
    """k commuting Hermitian matrices plus the energy below which the
    truncated basis is spectrally complete."""

    matrices: list
    h: float
    complete_below: float

    @property
    def k(self):
        return len(self.matrices)

    def commutator_norm(self):
        worst = 0.0
        for i in range(self.k):
            for j in range(i + 1, self.k):
                A, B = self.matrices[i], self.matrices[j]
                worst = max(worst, float(np.linalg.norm(A @ B - B @ A, ord=np.inf)))
        return worst


@dataclass
class JointSpectrum:
    """Joint eigenvalues as an (N, k) array, one row per eigenvector."""

    points: np.ndarray
    h: float
    complete_below: float

    def below(self, e_max, component=0):
        if e_max > self.complete_below:
            raise TruncationError(
                f"window extends to {e_max:.4g} but the spectrum is only "
                f"complete below {self.complete_below:.4g}")
        return self.points[self.points[:, component] <= e_max]


def build_operators(sys, h, n_basis):
    """Exact truncated-basis matrices for the oscillator models.

    For the 2d models the basis is the set of number states with
    n1 + n2 <= n_basis; both operators preserve the total quantum number, so
    truncation introduces no error below h (n_basis + 1).
    """
    h = float(h)
    if sys.mid == kernels.MID_HO1D:
        H = np.diag(h * (np.arange(n_basis) + 0.5)).astype(complex)
        return OperatorSet([H], h, complete_below=h * (n_basis - 0.5))
    if sys.mid in (kernels.MID_HO2D, kernels.MID_HO2D_HL):
        states = [(n1, n2) for n in range(n_basis + 1)
                  for n1 in range(n + 1) for n2 in [n - n1]]
        index = {s: i for i, s in enumerate(states)}
        N = len(states)
        H = np.zeros((N, N), dtype=complex)
        for (n1, n2), i in index.items():
            H[i, i] = h * (n1 + n2 + 1)
        if sys.mid == kernels.MID_HO2D:
            return OperatorSet([H], h, complete_below=h * n_basis + 0.5 * h)
        L = np.zeros((N, N), dtype=complex)
        for (n1, n2), i in index.items():
            if n2 >= 1 and (n1 + 1, n2 - 1) in index:
                L[index[(n1 + 1, n2 - 1)], i] = -1j * h * np.sqrt((n1 + 1) * n2)
            if n1 >= 1 and (n1 - 1, n2 + 1) in index:
                L[index[(n1 - 1, n2 + 1)], i] = 1j * h * np.sqrt(n1 * (n2 + 1))
        return OperatorSet([H, L], h, complete_below=h * n_basis + 0.5 * h)
    if sys.mid == kernels.MID_ANISO:
        omega = sys.params[0]
        states = [(n1, n2) for n1 in range(n_basis) for n2 in range(n_basis)]
        diag = np.array([h * (n1 + 0.5) + h * omega * (n2 + 0.5)
                         for n1, n2 in states])
        H = np.diag(diag).astype(complex)
        return OperatorSet([H], h,
                           complete_below=h * min(1.0, omega) * (n_basis - 0.5))
    raise InputError(f"no exact operator construction for model id {sys.mid}")


def _cluster(values, tol):
    """Contiguous index runs of sorted values with gaps below tol."""
    runs = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            runs.append((start, i))
            start = i
    return runs


def _simdiag(mats, tol_degen):
    k = len(mats)
    A = np.asarray(mats[0])
    scale = max(float(np.linalg.norm(A, ord=np.inf)), 1.0)
    w, U = eigh(A)
    tol = tol_degen * scale
    runs = _cluster(w, tol)
    for (s0, e0), (s1, e1) in zip(runs, runs[1:]):
        if w[s1] - w[e0 - 1] < 10 * tol:
            raise DegeneracyError(
                f"inter-cluster gap {w[s1] - w[e0 - 1]:.3e} below "
                f"{10 * tol:.3e}; tighten tol_degen or treat as degenerate")
    if k == 1:
        return w[:, None]
    out = np.empty((len(w), k))
    row = 0
    for s, e in runs:
        V = U[:, s:e]
        mean = float(np.mean(w[s:e]))
        sub = [V.conj().T @ M @ V for M in mats[1:]]
        rest = _simdiag(sub, tol_degen)
        m = e - s
        out[row:row + m, 0] = mean
        out[row:row + m, 1:] = rest
        row += m
    return out


def joint_spectrum(ops, tol_degen=1e-9):
    """Joint eigenvalues of commuting Hermitian matrices.

    Diagonalizes the first operator, groups eigenvalues into clusters at
    relative tolerance tol_degen, projects the remaining operators into each
    cluster, and recurses.  Clusters separated by less than ten times the
    grouping tolerance are ambiguous and raise DegeneracyError.
    """
    pts = _simdiag(ops.matrices, tol_degen)
    order = np.lexsort(pts.T[::-1])
    return JointSpectrum(points=pts[order], h=ops.h,
                         complete_below=ops.complete_below)


def radial_sector_spectrum(sys, h, e_max, dr=None, m_max=None,
                           mass_tol=1e-8, richardson=True):
    """Joint spectrum of the central model by angular momentum sectors.

    The sector with angular quantum number m is the radial operator
    -h^2 (1/r)(r psi')' + (V(r) + h^2 m^2 / r^2) psi, discretized by finite
    volumes on cell centers r_i = (i - 1/2) dr and symmetrized with the
    weight sqrt(r_i).  The flux through r = 0 vanishes because of the metric
    factor, so the axis needs no special casing and the scheme stays second
    order for every m, including m = 0.  A Dirichlet wall sits at R_max with
    V(R_max) >= 4 e_max.  Eigenpairs leaking more than mass_tol of their
    vector mass into the outer 5% of the grid raise TruncationError.  Joint
    points are (E, h m).  With richardson=True each eigenvalue is
    extrapolated from the dr and dr/2 grids, removing the leading dr^2
    error.
    """
    if sys.mid != kernels.MID_CENTRAL:
        raise InputError("radial sector spectrum requires the central model")
    lam = sys.params[0]
    h = float(h)

    def V(r):
        return r * r + lam * r ** 4

    rr = np.linspace(1e-3, 50.0, 20000)
    r_max = float(rr[np.searchsorted(V(rr), 4.0 * e_max)])
    if dr is None:
        dr = 2 * np.pi * h / (40.0 * np.sqrt(e_max))
    if m_max is None:
        m_max = int(np.ceil(e_max / (2.0 * h))) + 2

    def sector(m, step):
        npt = max(int(np.ceil(r_max / step)), 16)
        dx = r_max / npt
        r = (np.arange(npt) + 0.5) * dx
        f_left = np.arange(npt) * dx
        f_right = np.arange(1, npt + 1) * dx
        c = (h / dx) ** 2
        diag = c * (f_left + f_right) / r + V(r) + h * h * m * m / (r * r)
        off = -c * f_right[:-1] / np.sqrt(r[:-1] * r[1:])
        w, v = eigh_tridiagonal(diag, off, select="v",
                                select_range=(-np.inf, 1.5 * e_max))
        return r, w, v

    pts = []
    for m in range(-m_max, m_max + 1):
        r, w, v = sector(m, dr)
        tail = max(1, int(0.05 * len(r)))
        keep = []
        for i in range(len(w)):
            if w[i] > e_max:
                continue
            mass = float(np.sum(v[-tail:, i] ** 2))
            if mass > mass_tol:
                raise TruncationError(
                    f"sector m={m}: eigenvector {i} leaks {mass:.2e} of its "
                    f"mass into the outer grid; increase the box")
            keep.append(i)
        if not keep:
            continue
        if richardson:
            _, w2, _ = sector(m, dr / 2)
            for i in keep:
                if i >= len(w2):
                    raise TruncationError(
                        f"sector m={m}: refined grid lost eigenvalue {i}")
                e_star = (4.0 * w2[i] - w[i]) / 3.0
                pts.append((e_star, h * m))
        else:
            for i in keep:
                pts.append((w[i], h * m))
    if not pts:
        raise TruncationError("no radial eigenvalues below e_max")
    pts = np.array(sorted(pts))
    return JointSpectrum(points=pts, h=h, complete_below=float(e_max))


def oracle_spectrum(name, h, e_max, params=None):
    """Closed-form joint spectra for the exactly solvable models."""
    h = float(h)
    if name == "ho1d":
        n = int(np.floor(e_max / h + 0.5)) + 1
        vals = h * (np.arange(n) + 0.5)
        return vals[vals <= e_max][:, None]
    if name == "ho2d":
        n = int(np.floor(e_max / h)) + 1
        vals = np.concatenate([np.full(m + 1, h * (m + 1)) for m in range(n)])
        return vals[vals <= e_max][:, None]
    if name == "ho2d_hl":
        pts = []
        n = 0
        while h * (n + 1) <= e_max:
            for m in range(-n, n + 1, 2):
                pts.append((h * (n + 1), h * m))
            n += 1
        return np.array(pts)
    if name == "central_quartic_lam0":
        pts = []
        m_max = int(np.floor(e_max / (2 * h)))
        for m in range(-m_max - 1, m_max + 2):
            nr = 0
            while 2 * h * (2 * nr + abs(m) + 1) <= e_max:
                pts.append((2 * h * (2 * nr + abs(m) + 1), h * m))
                nr += 1
        return np.array(sorted(pts))
    raise InputError(f"no oracle spectrum for {name}")
