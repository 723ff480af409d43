"""Maslov indices of basic cycles via det^2 winding on the Lagrangian Grassmannian.

The loop of Lagrangian planes is the tangent family of
Lambda_1 = {(Psi^t(y, eta), (y, eta))} inside the product space
T*R^n x T*R^n carrying the difference form omega (-) omega.  In product
coordinates (x, xi, y, eta) that form is standard after regrouping positions
Q = (x, eta) and momenta P = (xi, y); frames are identified with unitary
matrices through Z = Q - iP and the index is the winding number of det(Z)^2.
The overall sign of the convention is pinned by the 1d harmonic oscillator,
whose energy cycle must carry index +2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FrameError, UndersamplingError
from .dynamics import flow_samples
from .periods import is_period


@dataclass
class LagrangianFrameLoop:
    """Ordered frames (2N x N matrices) spanning Lagrangian planes, plus the
    row indices identifying position and momentum blocks."""

    samples: list
    q_rows: np.ndarray
    p_rows: np.ndarray
    closed: bool
    max_isotropy_defect: float


def _isotropy_defect(F, q_rows, p_rows):
    Q = F[q_rows, :]
    P = F[p_rows, :]
    return float(np.max(np.abs(Q.T @ P - P.T @ Q)))


def _principal_angle_gap(F1, F2):
    """Largest principal angle between the column spans of F1, F2."""
    Q1, _ = np.linalg.qr(F1)
    Q2, _ = np.linalg.qr(F2)
    sv = np.linalg.svd(Q1.T @ Q2, compute_uv=False)
    return float(np.arccos(np.clip(sv[-1], -1.0, 1.0)))


def tangent_basis(sys, p):
    """Orthonormal basis of T_p Sigma_0: the null space of the symbol Jacobian."""
    g = sys.grad_q0(p)
    q, _ = np.linalg.qr(g.T, mode="complete")
    V = q[:, sys.k:]
    return V


def lambda1_frame_loop(sys, p, T, n_frames=256, tol_flow=1e-11, tol_iso=1e-8,
                       check_period=True):
    """Loop of tangent frames of the flow-graph Lagrangian along s -> Psi^{sT}(p).

    Columns are (dPsi^{sT} V_i, V_i) for a tangent basis V_i of Sigma_0 at p,
    together with (K_j(Psi^{sT} p), 0) for the k Hamiltonian fields.
    """
    T = np.atleast_1d(np.asarray(T, dtype=float))
    if check_period and np.linalg.norm(T) > 0 and not is_period(sys, p, T):
        raise FrameError(f"T={T} is not a period at the given point")
    n, k = sys.n, sys.k
    d = 2 * n
    V = tangent_basis(sys, p)
    if np.linalg.matrix_rank(V) < d - k:
        raise FrameError("degenerate tangent basis on Sigma_0")

    ss = np.linspace(0.0, 1.0, n_frames + 1)
    if np.linalg.norm(T) == 0.0:
        states = np.tile(np.concatenate([p.z, np.eye(d).ravel()]), (len(ss), 1))
    else:
        states, _ = flow_samples(sys, T, ss[1:], p, tol_flow=tol_flow, with_mono=True)
        first = np.concatenate([p.z, np.eye(d).ravel()])
        states = np.vstack([first, states])

    from . import kernels

    frames = []
    max_iso = 0.0
    q_rows = np.concatenate([np.arange(0, n), np.arange(3 * n, 4 * n)])
    p_rows = np.concatenate([np.arange(n, 2 * n), np.arange(2 * n, 3 * n)])
    for st in states:
        z = st[:d]
        M = st[d:d + d * d].reshape(d, d)
        grads = np.empty((k, d))
        kernels.eval_grad_q0(sys.mid, sys.params, z, grads)
        F = np.zeros((2 * d, d))
        F[:d, :d - k] = M @ V
        F[d:, :d - k] = V
        for j in range(k):
            F[:n, d - k + j] = grads[j, n:]
            F[n:d, d - k + j] = -grads[j, :n]
        if np.linalg.matrix_rank(F) < d:
            raise FrameError("rank-deficient Lagrangian frame")
        max_iso = max(max_iso, _isotropy_defect(F, q_rows, p_rows))
        frames.append(F)
    if max_iso > tol_iso:
        raise FrameError(f"isotropy defect {max_iso:.3e} exceeds {tol_iso:.1e}")

    for i in range(len(frames) - 1):
        if _principal_angle_gap(frames[i], frames[i + 1]) > np.pi / 4:
            raise UndersamplingError(
                "consecutive frames differ by a principal angle > pi/4; "
                "increase n_frames")
    closed = _principal_angle_gap(frames[0], frames[-1]) < 1e-6
    return LagrangianFrameLoop(samples=frames, q_rows=q_rows, p_rows=p_rows,
                               closed=closed, max_isotropy_defect=max_iso)


def maslov_index(loop):
    """Winding number of det^2 of the unitary representatives along the loop."""
    if not loop.closed:
        raise FrameError("frame loop is not closed")
    phases = []
    for F in loop.samples:
        On, _ = np.linalg.qr(F)
        Z = On[loop.q_rows, :] - 1j * On[loop.p_rows, :]
        det = np.linalg.det(Z)
        if abs(abs(det) - 1.0) > 1e-6:
            raise FrameError(f"non-unitary frame representative |det|={abs(det):.6f}")
        phases.append(np.angle(det ** 2))
    total = 0.0
    for i in range(len(phases) - 1):
        dphi = phases[i + 1] - phases[i]
        dphi = (dphi + np.pi) % (2 * np.pi) - np.pi
        if abs(dphi) > np.pi / 2:
            raise UndersamplingError(
                f"phase jump {dphi:.3f} > pi/2 between consecutive frames; "
                "increase n_frames")
        total += dphi
    winding = total / (2 * np.pi)
    index = int(round(winding))
    if abs(winding - index) > 1e-6:
        raise FrameError(f"non-integer winding {winding:.8f}")
    return index


def cycle_maslov_index(sys, p, T, n_frames=256, tol_flow=1e-11):
    """Maslov index of the closed joint-flow cycle with period T."""
    loop = lambda1_frame_loop(sys, p, T, n_frames=n_frames, tol_flow=tol_flow)
    return maslov_index(loop)
