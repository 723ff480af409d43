"""Phase-space data model: systems, points, energy levels, hypothesis checks.

Systems come from a closed built-in library selected by name; each model
supplies its joint symbol, exact gradients and Hessians through the kernel
module, plus a vectorized batch evaluation used by the Monte Carlo sampler.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, RootFindError


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, xi) of T*R^n."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        if x.shape != xi.shape or x.ndim != 1 or x.size < 1:
            raise InputError("x and xi must be 1-d arrays of equal length >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise InputError("phase point coordinates must be finite")

    @property
    def n(self):
        return self.x.size

    @property
    def z(self):
        """Flat coordinates (x_1..x_n, xi_1..xi_n)."""
        return np.concatenate([self.x, self.xi])

    @classmethod
    def from_z(cls, z):
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n].copy(), z[n:].copy())


@dataclass(frozen=True)
class BasisChange:
    """Invertible k x k matrix whose columns are the lattice basis e_j."""

    a: np.ndarray
    a_inv: np.ndarray

    @classmethod
    def from_matrix(cls, a):
        a = np.asarray(a, dtype=float)
        det = np.linalg.det(a)
        if abs(det) <= 0.0:
            raise InputError("basis-change matrix is singular")
        a_inv = np.linalg.inv(a)
        bc = cls(a=a, a_inv=a_inv)
        bc.check()
        return bc

    def check(self, tol=1e-12):
        k = self.a.shape[0]
        err = np.max(np.abs(self.a @ self.a_inv - np.eye(k)))
        if err > tol:
            raise InputError(f"a * a_inv deviates from identity by {err:.3e}")

    @property
    def det(self):
        return float(np.linalg.det(self.a))


@dataclass(frozen=True)
class ClassicalSystem:
    """A commuting family of classical Hamiltonians on T*R^n."""

    name: str
    mid: int
    n: int
    k: int
    params: np.ndarray
    q1_kind: int = kernels.Q1_NONE
    q1_params: np.ndarray = field(default_factory=lambda: np.zeros(1))
    E0: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def has_subprincipal(self):
        return self.q1_kind != kernels.Q1_NONE

    def _check_point(self, p):
        if p.n != self.n:
            raise InputError(f"point dimension {p.n} != system dimension {self.n}")

    def q0(self, p):
        """Joint principal symbol at a phase point."""
        self._check_point(p)
        out = np.empty(self.k)
        kernels.eval_q0(self.mid, self.params, p.z, out)
        return out

    def q0_z(self, z):
        out = np.empty(self.k)
        kernels.eval_q0(self.mid, self.params, np.asarray(z, dtype=float), out)
        return out

    def grad_q0(self, p):
        """Gradient rows, shape (k, 2n)."""
        self._check_point(p)
        out = np.empty((self.k, 2 * self.n))
        kernels.eval_grad_q0(self.mid, self.params, p.z, out)
        return out

    def q1(self, p):
        self._check_point(p)
        out = np.empty(self.k)
        kernels.eval_q1(self.mid, self.q1_kind, self.q1_params, p.z, out)
        return out

    def q0_batch(self, Z):
        """Vectorized joint symbol on an (N, 2n) array of phase points."""
        Z = np.asarray(Z, dtype=float)
        if self.mid == kernels.MID_HO1D:
            return 0.5 * (Z[:, 0] ** 2 + Z[:, 1] ** 2)[:, None]
        if self.mid in (kernels.MID_HO2D_HL, kernels.MID_HO2D):
            h = 0.5 * np.sum(Z * Z, axis=1)
            if self.mid == kernels.MID_HO2D:
                return h[:, None]
            ell = Z[:, 0] * Z[:, 3] - Z[:, 1] * Z[:, 2]
            return np.stack([h, ell], axis=1)
        if self.mid == kernels.MID_ANISO:
            om = self.params[0]
            h = 0.5 * (Z[:, 0] ** 2 + Z[:, 2] ** 2) + 0.5 * om * (Z[:, 1] ** 2 + Z[:, 3] ** 2)
            return h[:, None]
        lam = self.params[0]
        r2 = Z[:, 0] ** 2 + Z[:, 1] ** 2
        h = Z[:, 2] ** 2 + Z[:, 3] ** 2 + r2 + lam * r2 * r2
        ell = Z[:, 0] * Z[:, 3] - Z[:, 1] * Z[:, 2]
        return np.stack([h, ell], axis=1)

    def grad_q0_batch(self, Z):
        """Vectorized gradients, shape (N, k, 2n)."""
        N = Z.shape[0]
        out = np.empty((N, self.k, 2 * self.n))
        if self.mid == kernels.MID_HO1D:
            out[:, 0, :] = Z
        elif self.mid in (kernels.MID_HO2D_HL, kernels.MID_HO2D):
            out[:, 0, :] = Z
            if self.mid == kernels.MID_HO2D_HL:
                out[:, 1, 0] = Z[:, 3]
                out[:, 1, 1] = -Z[:, 2]
                out[:, 1, 2] = -Z[:, 1]
                out[:, 1, 3] = Z[:, 0]
        elif self.mid == kernels.MID_ANISO:
            om = self.params[0]
            out[:, 0, 0] = Z[:, 0]
            out[:, 0, 1] = om * Z[:, 1]
            out[:, 0, 2] = Z[:, 2]
            out[:, 0, 3] = om * Z[:, 3]
        else:
            lam = self.params[0]
            r2 = Z[:, 0] ** 2 + Z[:, 1] ** 2
            c = 2.0 + 4.0 * lam * r2
            out[:, 0, 0] = c * Z[:, 0]
            out[:, 0, 1] = c * Z[:, 1]
            out[:, 0, 2] = 2.0 * Z[:, 2]
            out[:, 0, 3] = 2.0 * Z[:, 3]
            out[:, 1, 0] = Z[:, 3]
            out[:, 1, 1] = -Z[:, 2]
            out[:, 1, 2] = -Z[:, 1]
            out[:, 1, 3] = Z[:, 0]
        return out


@dataclass
class EnergyLevel:
    """A regular value E0 together with seed points on Sigma_0."""

    E0: np.ndarray
    seed_points: list
    connected: bool = True
    tol_level: float = 1e-10

    def __post_init__(self):
        self.E0 = np.atleast_1d(np.asarray(self.E0, dtype=float))

    def check(self, sys):
        for p in self.seed_points:
            res = np.linalg.norm(sys.q0(p) - self.E0)
            if res > self.tol_level:
                raise InputError(f"seed residual {res:.3e} exceeds tol_level")


_REGISTRY = {
    "ho1d": dict(mid=kernels.MID_HO1D, n=1, k=1, params=(), connected=True),
    "ho2d_hl": dict(mid=kernels.MID_HO2D_HL, n=2, k=2, params=(), connected=True),
    "ho2d": dict(mid=kernels.MID_HO2D, n=2, k=1, params=(), connected=True),
    "aniso_ho": dict(mid=kernels.MID_ANISO, n=2, k=1, params=("omega",), connected=True),
    "central_quartic": dict(mid=kernels.MID_CENTRAL, n=2, k=2, params=("lam",), connected=True),
}

_PARAM_DEFAULTS = {"omega": np.sqrt(2.0), "lam": 0.1}

_Q1_KINDS = {"none": kernels.Q1_NONE, "const": kernels.Q1_CONST,
             "linear_x1": kernels.Q1_LINEAR_X1}


def model_names():
    return sorted(_REGISTRY)


def make_system(name, params=None, q1=None, E0=None):
    """Instantiate a library model.

    params is a dict of model parameters; q1, when given, is
    {"kind": "const"|"linear_x1", "coeffs": [c_1..c_k]}.
    """
    if name not in _REGISTRY:
        raise InputError(f"unknown model '{name}'; available: {model_names()}")
    entry = _REGISTRY[name]
    params = dict(params or {})
    pvals = []
    for pname in entry["params"]:
        pvals.append(float(params.pop(pname, _PARAM_DEFAULTS[pname])))
    if params:
        raise InputError(f"unknown parameters for model '{name}': {sorted(params)}")
    q1_kind = kernels.Q1_NONE
    q1_params = np.zeros(max(1, entry["k"]))
    if q1:
        kind = q1.get("kind", "none")
        if kind not in _Q1_KINDS:
            raise InputError(f"unknown subprincipal kind '{kind}'")
        q1_kind = _Q1_KINDS[kind]
        if q1_kind != kernels.Q1_NONE:
            coeffs = np.atleast_1d(np.asarray(q1.get("coeffs", []), dtype=float))
            if coeffs.size != entry["k"]:
                raise InputError("subprincipal coeffs must have length k")
            q1_params = coeffs
    if E0 is not None:
        E0 = np.atleast_1d(np.asarray(E0, dtype=float))
        if E0.size != entry["k"]:
            raise InputError("E0 must have length k")
    return ClassicalSystem(
        name=name, mid=entry["mid"], n=entry["n"], k=entry["k"],
        params=np.array(pvals if pvals else [0.0]),
        q1_kind=q1_kind, q1_params=q1_params, E0=E0,
        metadata={"connected": entry["connected"]},
    )


def evaluate_joint_symbol(sys, p):
    """q0 at a phase point (vector in R^k)."""
    return sys.q0(p)


def gradient_fd_error(sys, rng, n_points=100, step=1e-6):
    """Max relative error of supplied gradients vs central finite differences."""
    worst = 0.0
    d = 2 * sys.n
    for _ in range(n_points):
        z = rng.uniform(-2.0, 2.0, size=d)
        p = PhasePoint.from_z(z)
        g = sys.grad_q0(p)
        g_fd = np.empty_like(g)
        for i in range(d):
            zp = z.copy()
            zm = z.copy()
            zp[i] += step
            zm[i] -= step
            g_fd[:, i] = (sys.q0_z(zp) - sys.q0_z(zm)) / (2 * step)
        scale = max(1.0, np.max(np.abs(g)))
        worst = max(worst, np.max(np.abs(g - g_fd)) / scale)
    return worst


def poisson_bracket(sys, p, i, j):
    """{q0_i, q0_j} at p = grad_i . J grad_j."""
    g = sys.grad_q0(p)
    n = sys.n
    gi, gj = g[i], g[j]
    return float(gi[:n] @ gj[n:] - gi[n:] @ gj[:n])


def find_level_point(sys, E0, guess, tol_level=1e-10, max_iter=60):
    """Damped Gauss-Newton projection of a guess onto Sigma_0 = q0^-1(E0)."""
    E0 = np.atleast_1d(np.asarray(E0, dtype=float))
    if E0.size != sys.k:
        raise InputError("E0 must have length k")
    z = guess.z.copy() if isinstance(guess, PhasePoint) else np.asarray(guess, dtype=float).copy()
    res = sys.q0_z(z) - E0
    rnorm = np.linalg.norm(res)
    for _ in range(max_iter):
        if rnorm <= tol_level:
            return PhasePoint.from_z(z)
        jac = sys.grad_q0(PhasePoint.from_z(z))
        step, *_ = np.linalg.lstsq(jac, res, rcond=None)
        lam = 1.0
        for _ in range(40):
            z_new = z - lam * step
            r_new = sys.q0_z(z_new) - E0
            if np.linalg.norm(r_new) < rnorm:
                break
            lam *= 0.5
        else:
            raise RootFindError("line search stalled", residual=rnorm)
        z, res, rnorm = z_new, r_new, np.linalg.norm(r_new)
    raise RootFindError(f"no convergence after {max_iter} iterations", residual=rnorm)


def seed_level_points(sys, E0, n_seeds, rng, tol_level=1e-10, scale=None):
    """Spread seed points over Sigma_0 by projecting random guesses."""
    E0 = np.atleast_1d(np.asarray(E0, dtype=float))
    if scale is None:
        scale = 1.0 + np.sqrt(np.max(np.abs(E0)))
    seeds = []
    attempts = 0
    while len(seeds) < n_seeds and attempts < 50 * n_seeds:
        attempts += 1
        guess = rng.normal(0.0, scale, size=2 * sys.n)
        try:
            seeds.append(find_level_point(sys, E0, guess, tol_level=tol_level))
        except RootFindError:
            continue
    if len(seeds) < n_seeds:
        raise RootFindError(f"only {len(seeds)}/{n_seeds} seeds converged")
    return seeds


@dataclass
class RegularityReport:
    ok: bool
    min_singular_value: float
    max_point_norm: float
    tol_rank: float
    n_samples: int
    messages: list


def validate_regular_proper(sys, level, n_samples=64, tol_rank=1e-6, rng=None,
                            flow_probe=None):
    """Probe (H1): Jacobian rank on sampled Sigma_0 points and flow boundedness.

    flow_probe, when given, is a callable p -> list of phase points along the
    joint flow; it feeds the properness (boundedness) probe.
    """
    if not level.seed_points:
        raise InputError("energy level has no seed points")
    rng = rng or np.random.default_rng(0)
    pts = list(level.seed_points)
    if len(pts) < n_samples:
        pts += seed_level_points(sys, level.E0, n_samples - len(pts), rng,
                                 tol_level=level.tol_level)
    min_sv = np.inf
    max_norm = 0.0
    for p in pts:
        jac = sys.grad_q0(p)
        sv = np.linalg.svd(jac, compute_uv=False)
        min_sv = min(min_sv, sv[-1])
        max_norm = max(max_norm, np.linalg.norm(p.z))
    if flow_probe is not None:
        for q in flow_probe(pts[0]):
            max_norm = max(max_norm, np.linalg.norm(q.z))
    messages = []
    ok = True
    if min_sv < tol_rank:
        ok = False
        messages.append(
            f"(H1) rank deficiency: min singular value {min_sv:.3e} < {tol_rank:.1e}")
    return RegularityReport(ok=ok, min_singular_value=float(min_sv),
                            max_point_norm=float(max_norm), tol_rank=tol_rank,
                            n_samples=len(pts), messages=messages)
