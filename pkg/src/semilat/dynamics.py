"""Hamiltonian flows, monodromy matrices and the action integral."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputError, IntegrationError
from .models import PhasePoint

MAX_STEPS = 2_000_000


def _canonical_J(n):
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


@dataclass
class TrajectorySegment:
    start: PhasePoint
    t: np.ndarray
    end: PhasePoint
    action: float
    steps: int
    max_energy_drift: float
    drift_warning: bool = False


@dataclass
class Monodromy:
    base: PhasePoint
    t: np.ndarray
    M: np.ndarray

    def symplecticity_defect(self):
        n = self.base.n
        J = _canonical_J(n)
        return float(np.max(np.abs(self.M.T @ J @ self.M - J)))


def hamiltonian_field(sys, j, p):
    """Hamiltonian field of the j-th symbol component (1-based j)."""
    if not 1 <= j <= sys.k:
        raise InputError(f"component index {j} outside 1..{sys.k}")
    w = np.zeros(sys.k)
    w[j - 1] = 1.0
    out = np.empty(2 * sys.n)
    kernels.eval_field_w(sys.mid, sys.params, w, p.z, out)
    return out


def _raise_status(status, where):
    if status == kernels.STEP_UNDERFLOW:
        raise IntegrationError(f"step-size underflow in {where}")
    if status == kernels.STEP_BUDGET:
        raise IntegrationError(f"step budget exhausted in {where}")


def flow_combination(sys, w, total_time, p, tol_flow=1e-10,
                     with_action=False, with_mono=False, with_sub=False):
    """Flow of the combination Hamiltonian <q0, w> for a given time.

    Returns the raw augmented final state (phase point, then the optional
    action / monodromy / subprincipal blocks) plus the step count.
    """
    d = 2 * sys.n
    dim = kernels.aug_dim(sys.mid, with_action, with_mono, with_sub)
    y = np.zeros(dim)
    y[:d] = p.z
    if with_mono:
        off = d + (1 if with_action else 0)
        y[off:off + d * d] = np.eye(d).ravel()
    status, steps = kernels.rk45_integrate(
        sys.mid, sys.params, np.asarray(w, dtype=float), sys.q1_kind, sys.q1_params,
        with_action, with_mono, with_sub, y, 0.0, float(total_time),
        tol_flow, tol_flow, MAX_STEPS)
    _raise_status(status, "flow_combination")
    return y, steps


def flow(sys, t, p, tol_flow=1e-10):
    """Joint flow Psi^t = Psi_1^{t_1} o ... o Psi_k^{t_k} with action integral.

    Component flows are applied in ascending order of application (component k
    first), matching the composition convention; the action accumulates along
    the composite path.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.size != sys.k:
        raise InputError(f"time vector has length {t.size}, expected {sys.k}")
    d = 2 * sys.n
    z = p.z.copy()
    q0_start = sys.q0_z(z)
    action = 0.0
    steps = 0
    drift = 0.0
    for j in range(sys.k - 1, -1, -1):
        if t[j] == 0.0:
            continue
        w = np.zeros(sys.k)
        w[j] = 1.0
        y = np.zeros(d + 1)
        y[:d] = z
        status, ns = kernels.rk45_integrate(
            sys.mid, sys.params, w, sys.q1_kind, sys.q1_params,
            True, False, False, y, 0.0, float(t[j]), tol_flow, tol_flow, MAX_STEPS)
        _raise_status(status, f"flow component {j + 1}")
        z = y[:d].copy()
        action += y[d]
        steps += ns
        drift = max(drift, float(np.linalg.norm(sys.q0_z(z) - q0_start)))
    return TrajectorySegment(start=p, t=t, end=PhasePoint.from_z(z),
                             action=float(action), steps=steps,
                             max_energy_drift=drift,
                             drift_warning=drift > 10 * tol_flow)


def monodromy(sys, t, p, tol_flow=1e-10, tol_symp=1e-8):
    """Derivative of the joint flow at p, via the variational equation.

    Integrates dM/ds = J Hess(<q0, t>)(Psi^{st} p) M over s in [0, 1]; for
    commuting fields this equals the derivative of the composite flow.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.size != sys.k:
        raise InputError(f"time vector has length {t.size}, expected {sys.k}")
    d = 2 * sys.n
    if np.all(t == 0.0):
        return Monodromy(base=p, t=t, M=np.eye(d))
    y, _ = flow_combination(sys, t, 1.0, p, tol_flow=tol_flow, with_mono=True)
    M = y[d:d + d * d].reshape(d, d).copy()
    mono = Monodromy(base=p, t=t, M=M)
    defect = mono.symplecticity_defect()
    if defect > tol_symp:
        raise IntegrationError(
            f"monodromy symplecticity defect {defect:.3e} exceeds {tol_symp:.1e}")
    return mono


def flow_samples(sys, w, times, p, tol_flow=1e-10, with_action=False,
                 with_mono=False, with_sub=False):
    """States of the combination flow at increasing sample times from 0."""
    d = 2 * sys.n
    dim = kernels.aug_dim(sys.mid, with_action, with_mono, with_sub)
    y0 = np.zeros(dim)
    y0[:d] = p.z
    if with_mono:
        off = d + (1 if with_action else 0)
        y0[off:off + d * d] = np.eye(d).ravel()
    states, status, steps = kernels.rk45_samples(
        sys.mid, sys.params, np.asarray(w, dtype=float), sys.q1_kind, sys.q1_params,
        with_action, with_mono, with_sub, y0, np.asarray(times, dtype=float),
        tol_flow, tol_flow, MAX_STEPS)
    _raise_status(status, "flow_samples")
    return states, steps
