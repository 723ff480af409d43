"""Detection and reduction of the joint-flow period lattice on Sigma_0."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import HypothesisViolation, NoPeriodError, InputError
from .models import BasisChange, PhasePoint, seed_level_points
from .dynamics import flow_combination, flow_samples


@dataclass
class PeriodLattice:
    """Reduced basis T_1..T_k (columns) of the joint-flow period lattice."""

    basis: np.ndarray
    a: BasisChange
    return_residuals: np.ndarray

    @property
    def k(self):
        return self.basis.shape[0]

    def min_basis_norm(self):
        return float(min(np.linalg.norm(self.basis[:, j]) for j in range(self.k)))


def refine_period(sys, p, T, tol_period=1e-9, max_iter=40):
    """Newton-refine a candidate period of the joint flow at p.

    Solves Psi^T(p) - p = 0 in T using the flow directions K_j as Jacobian.
    Returns (T, residual) or None when the iteration leaves the basin.
    """
    T = np.asarray(T, dtype=float).copy()
    T0_norm = np.linalg.norm(T) + 1.0
    for _ in range(max_iter):
        if np.linalg.norm(T) > 10.0 * T0_norm:
            return None
        y, _ = flow_combination(sys, T, 1.0, p, tol_flow=min(tol_period * 1e-2, 1e-11))
        z_end = y[:2 * sys.n]
        r = z_end - p.z
        res = np.linalg.norm(r)
        if res <= tol_period:
            return T, res
        grads = np.empty((sys.k, 2 * sys.n))
        kernels.eval_grad_q0(sys.mid, sys.params, z_end, grads)
        K = np.empty((2 * sys.n, sys.k))
        n = sys.n
        for j in range(sys.k):
            K[:n, j] = grads[j, n:]
            K[n:, j] = -grads[j, :n]
        dT, *_ = np.linalg.lstsq(K, r, rcond=None)
        T = T - dT
    return None


def _local_minima(vals):
    idx = []
    for i in range(1, len(vals) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            idx.append(i)
    return idx


def _scan_candidates(sys, p, t_max, grid_dt, tol_flow):
    """Grid-scan for near-returns of the joint flow; returns candidate times."""
    z0 = p.z
    cands = []
    if sys.k == 1:
        ts = np.arange(grid_dt, t_max + grid_dt, grid_dt)
        w = np.array([1.0])
        dists, status = kernels.return_distances(
            sys.mid, sys.params, z0, z0.copy(), w, ts, tol_flow, tol_flow, 10_000_000)
        if status != kernels.OK:
            raise NoPeriodError("flow integration failed during period scan")
        speed = np.linalg.norm(_field_matrix(sys, z0), axis=0).max()
        capture = 1.5 * speed * grid_dt
        for i in _local_minima(dists):
            if dists[i] < capture:
                cands.append(np.array([ts[i]]))
        if dists[-1] < capture:
            cands.append(np.array([ts[-1]]))
    else:
        # sample the second flow, then scan the first flow from each sample
        t2s = np.arange(-t_max, t_max + grid_dt, grid_dt)
        # integrate from 0 outwards in both directions
        neg = np.sort(t2s[t2s < 0])[::-1]
        pos = np.sort(t2s[t2s >= 0])
        w2 = np.zeros(sys.k)
        w2[1] = 1.0
        rows = {}
        for side in (pos, neg):
            if len(side) == 0:
                continue
            states, _ = flow_samples(sys, w2, side, p, tol_flow=tol_flow)
            for t2, st in zip(side, states):
                rows[float(t2)] = st[:2 * sys.n].copy()
        speed = np.linalg.norm(_field_matrix(sys, z0), axis=0).max()
        capture = 1.5 * speed * grid_dt * np.sqrt(2.0)
        t1s = np.arange(0.0, t_max + grid_dt, grid_dt)
        w1 = np.zeros(sys.k)
        w1[0] = 1.0
        for t2 in sorted(rows):
            zstart = rows[t2]
            dists, status = kernels.return_distances(
                sys.mid, sys.params, z0, zstart.copy(), w1, t1s[1:],
                tol_flow, tol_flow, 10_000_000)
            if status != kernels.OK:
                raise NoPeriodError("flow integration failed during period scan")
            dists = np.concatenate([[np.linalg.norm(zstart - z0)], dists])
            for i in _local_minima(dists):
                if dists[i] < capture:
                    cands.append(np.array([t1s[i], t2]))
            if dists[0] < capture:
                cands.append(np.array([0.0, t2]))
    return cands


def _field_matrix(sys, z):
    grads = np.empty((sys.k, 2 * sys.n))
    kernels.eval_grad_q0(sys.mid, sys.params, z, grads)
    n = sys.n
    K = np.empty((2 * sys.n, sys.k))
    for j in range(sys.k):
        K[:n, j] = grads[j, n:]
        K[n:, j] = -grads[j, :n]
    return K


def _size_reduce_generators(gens, tol_zero=1e-7):
    """Collapse a float generating set to an independent lattice basis."""
    gens = [g.copy() for g in gens if np.linalg.norm(g) > tol_zero]
    for _ in range(200):
        gens = [g for g in gens if np.linalg.norm(g) > tol_zero]
        gens.sort(key=np.linalg.norm)
        changed = False
        for i in range(len(gens)):
            for j in range(len(gens)):
                if i == j:
                    continue
                gi = gens[i]
                if np.linalg.norm(gi) <= tol_zero or np.linalg.norm(gens[j]) <= tol_zero:
                    continue
                m = round(float(gens[j] @ gi) / float(gi @ gi))
                if m != 0:
                    cand = gens[j] - m * gi
                    if np.linalg.norm(cand) < np.linalg.norm(gens[j]) - 1e-12:
                        gens[j] = cand
                        changed = True
        gens = [g for g in gens if np.linalg.norm(g) > tol_zero]
        if not changed:
            break
    return gens


def lattice_basis_from_candidates(cands, k, tol_zero=1e-7):
    """Select a reduced basis of the lattice generated by candidate periods."""
    gens = _size_reduce_generators(cands, tol_zero=tol_zero)
    # keep only k independent vectors (size reduction leaves extras near-parallel)
    basis = []
    for g in sorted(gens, key=np.linalg.norm):
        if not basis:
            basis.append(g)
            continue
        B = np.stack(basis, axis=1)
        coeffs, *_ = np.linalg.lstsq(B, g, rcond=None)
        if np.linalg.norm(g - B @ coeffs) > tol_zero:
            basis.append(g)
        if len(basis) == k:
            break
    if len(basis) < k:
        return None
    B = np.stack(basis, axis=1)
    B = reduce_basis(B)
    return B


def reduce_basis(B):
    """Greedy pairwise (Gauss/Lagrange style) reduction; exact for k <= 2."""
    B = B.copy()
    k = B.shape[1]
    if k == 1:
        out = B
    else:
        for _ in range(100):
            changed = False
            order = np.argsort([np.linalg.norm(B[:, j]) for j in range(k)])
            B = B[:, order]
            for j in range(1, k):
                for i in range(j):
                    m = round(float(B[:, j] @ B[:, i]) / float(B[:, i] @ B[:, i]))
                    if m != 0:
                        cand = B[:, j] - m * B[:, i]
                        if np.linalg.norm(cand) < np.linalg.norm(B[:, j]) - 1e-12:
                            B[:, j] = cand
                            changed = True
            if not changed:
                break
        out = B
    # deterministic sign: first entry of largest magnitude positive
    for j in range(k):
        col = out[:, j]
        lead = col[np.argmax(np.abs(col))]
        if lead < 0:
            out[:, j] = -col
    order = np.lexsort(np.round(out[::-1], 9))
    return out[:, order]


def unimodular_transform(B_from, B_to, tol=1e-6):
    """Integer unimodular X with B_from @ X = B_to, or None."""
    X = np.linalg.solve(B_from, B_to)
    Xr = np.round(X)
    if np.max(np.abs(X - Xr)) > tol:
        return None
    if abs(abs(np.linalg.det(Xr)) - 1.0) > tol:
        return None
    return Xr.astype(int)


def detect_period_lattice(sys, p, t_max=14.0, tol_period=1e-9, grid_dt=0.05,
                          tol_flow=1e-11, n_verify=3, tol_h2=1e-6, rng=None,
                          E0=None):
    """Find a reduced basis of {T : Psi^T(p) = p} by scan + Newton + reduction.

    The basis is re-detected at n_verify further Sigma_0 points (constant
    period requirement); disagreement raises a (H2) violation.
    """
    cands = _scan_candidates(sys, p, t_max, grid_dt, tol_flow)
    refined = []
    for c in cands:
        out = refine_period(sys, p, c, tol_period=tol_period)
        if out is None:
            continue
        T, res = out
        if np.linalg.norm(T) < 1e-6 or np.max(np.abs(T)) > t_max * 1.2:
            continue
        if not any(np.linalg.norm(T - R) < 1e-6 for R in refined):
            refined.append(T)
    if not refined:
        raise NoPeriodError(
            f"no joint-flow return within t_max={t_max}; (H2) unverifiable at this horizon")
    B = lattice_basis_from_candidates(refined, sys.k)
    if B is None:
        raise NoPeriodError(
            f"found only a rank-deficient period set within t_max={t_max}; "
            "(H2) unverifiable at this horizon")

    residuals = np.empty(sys.k)
    for j in range(sys.k):
        out = refine_period(sys, p, B[:, j], tol_period=tol_period)
        if out is None:
            raise NoPeriodError("basis refinement diverged")
        B[:, j], residuals[j] = out

    if n_verify > 0:
        rng = rng or np.random.default_rng(1)
        E_here = sys.q0(p) if E0 is None else np.asarray(E0, dtype=float)
        others = seed_level_points(sys, E_here, n_verify, rng)
        for q in others:
            for j in range(sys.k):
                out = refine_period(sys, q, B[:, j], tol_period=tol_period)
                if out is None:
                    raise HypothesisViolation(
                        "H2", f"basis period {B[:, j]} is not a period at {q.z}")
                Tq, _ = out
                if np.linalg.norm(Tq - B[:, j]) > tol_h2:
                    raise HypothesisViolation(
                        "H2", "periods differ across Sigma_0 points by "
                        f"{np.linalg.norm(Tq - B[:, j]):.3e} > {tol_h2:.1e}")

    a = BasisChange.from_matrix(B / (2.0 * np.pi))
    return PeriodLattice(basis=B, a=a, return_residuals=residuals)


def is_period(sys, p, T, tol=1e-8, tol_flow=1e-11):
    y, _ = flow_combination(sys, np.asarray(T, dtype=float), 1.0, p, tol_flow=tol_flow)
    return np.linalg.norm(y[:2 * sys.n] - p.z) <= tol
