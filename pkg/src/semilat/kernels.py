"""Hot numerical kernels: model symbols and an adaptive RK45 propagator.

Everything in this module is written so that it can be compiled with numba.
Set the environment variable ``SEMILAT_NUMBA=0`` to force the pure-numpy
fallback path (the functions are then executed as plain Python); this is what
``benchmarks/bench_kernels.py`` compares.  If numba is not importable the
fallback is selected automatically.

Models are identified by small integer ids so that the dispatch survives
nopython compilation:

===========  ==================================================  ===  ===
id           joint principal symbol                              n    k
===========  ==================================================  ===  ===
MID_HO1D     (x^2 + xi^2)/2                                      1    1
MID_HO2D_HL  ((|x|^2+|xi|^2)/2,  x1*xi2 - x2*xi1)                2    2
MID_HO2D     (|x|^2+|xi|^2)/2                                    2    1
MID_ANISO    (x1^2+xi1^2)/2 + omega*(x2^2+xi2^2)/2               2    1
MID_CENTRAL  (|xi|^2 + r^2 + lam*r^4,  x1*xi2 - x2*xi1)          2    2
===========  ==================================================  ===  ===

Phase points are flat arrays z = (x_1..x_n, xi_1..xi_n).  The propagator
integrates the flow of the combination Hamiltonian <q0, w> for a weight
vector w, optionally carrying the action integral, the monodromy matrix and
a subprincipal quadrature as extra state.
"""

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("SEMILAT_NUMBA", "1") != "0"
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

MID_HO1D = 0
MID_HO2D_HL = 1
MID_HO2D = 2
MID_ANISO = 3
MID_CENTRAL = 4

# subprincipal symbol kinds
Q1_NONE = 0
Q1_CONST = 1     # q1_j = c_j
Q1_LINEAR_X1 = 2  # q1_j = c_j * x_1

# integrator status codes
OK = 0
STEP_UNDERFLOW = 1
STEP_BUDGET = 2


@njit(cache=True)
def model_dims(mid):
    if mid == MID_HO1D:
        return 1, 1
    elif mid == MID_HO2D_HL:
        return 2, 2
    elif mid == MID_HO2D:
        return 2, 1
    elif mid == MID_ANISO:
        return 2, 1
    else:
        return 2, 2


@njit(cache=True)
def eval_q0(mid, params, z, out):
    """Joint principal symbol at z; writes the k values into out."""
    if mid == MID_HO1D:
        out[0] = 0.5 * (z[0] * z[0] + z[1] * z[1])
    elif mid == MID_HO2D_HL:
        out[0] = 0.5 * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3])
        out[1] = z[0] * z[3] - z[1] * z[2]
    elif mid == MID_HO2D:
        out[0] = 0.5 * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3])
    elif mid == MID_ANISO:
        om = params[0]
        out[0] = 0.5 * (z[0] * z[0] + z[2] * z[2]) + 0.5 * om * (z[1] * z[1] + z[3] * z[3])
    else:
        lam = params[0]
        r2 = z[0] * z[0] + z[1] * z[1]
        out[0] = z[2] * z[2] + z[3] * z[3] + r2 + lam * r2 * r2
        out[1] = z[0] * z[3] - z[1] * z[2]


@njit(cache=True)
def eval_grad_q0(mid, params, z, out):
    """Gradients of the joint symbol; out has shape (k, 2n), one row per component."""
    if mid == MID_HO1D:
        out[0, 0] = z[0]
        out[0, 1] = z[1]
    elif mid == MID_HO2D_HL:
        for i in range(4):
            out[0, i] = z[i]
        out[1, 0] = z[3]
        out[1, 1] = -z[2]
        out[1, 2] = -z[1]
        out[1, 3] = z[0]
    elif mid == MID_HO2D:
        for i in range(4):
            out[0, i] = z[i]
    elif mid == MID_ANISO:
        om = params[0]
        out[0, 0] = z[0]
        out[0, 1] = om * z[1]
        out[0, 2] = z[2]
        out[0, 3] = om * z[3]
    else:
        lam = params[0]
        r2 = z[0] * z[0] + z[1] * z[1]
        c = 2.0 + 4.0 * lam * r2
        out[0, 0] = c * z[0]
        out[0, 1] = c * z[1]
        out[0, 2] = 2.0 * z[2]
        out[0, 3] = 2.0 * z[3]
        out[1, 0] = z[3]
        out[1, 1] = -z[2]
        out[1, 2] = -z[1]
        out[1, 3] = z[0]


@njit(cache=True)
def eval_field_w(mid, params, w, z, out):
    """Hamiltonian field of <q0, w>: (d/dxi, -d/dx) of the combination."""
    n, k = model_dims(mid)
    d = 2 * n
    grads = np.empty((k, d))
    eval_grad_q0(mid, params, z, grads)
    for i in range(n):
        gx = 0.0
        gxi = 0.0
        for j in range(k):
            gx += w[j] * grads[j, i]
            gxi += w[j] * grads[j, n + i]
        out[i] = gxi
        out[n + i] = -gx


@njit(cache=True)
def eval_hess_w(mid, params, w, z, out):
    """Hessian of <q0, w> with respect to (x, xi); out has shape (2n, 2n)."""
    out[:, :] = 0.0
    if mid == MID_HO1D:
        out[0, 0] = w[0]
        out[1, 1] = w[0]
    elif mid == MID_HO2D_HL:
        for i in range(4):
            out[i, i] = w[0]
        out[0, 3] += w[1]
        out[3, 0] += w[1]
        out[1, 2] -= w[1]
        out[2, 1] -= w[1]
    elif mid == MID_HO2D:
        for i in range(4):
            out[i, i] = w[0]
    elif mid == MID_ANISO:
        om = params[0]
        out[0, 0] = w[0]
        out[1, 1] = w[0] * om
        out[2, 2] = w[0]
        out[3, 3] = w[0] * om
    else:
        lam = params[0]
        r2 = z[0] * z[0] + z[1] * z[1]
        c1 = 2.0 + 4.0 * lam * r2   # V'(r)/r
        c2 = 8.0 * lam               # (V'' - V'/r)/r^2
        out[0, 0] = w[0] * (c1 + c2 * z[0] * z[0])
        out[1, 1] = w[0] * (c1 + c2 * z[1] * z[1])
        out[0, 1] = w[0] * c2 * z[0] * z[1]
        out[1, 0] = out[0, 1]
        out[2, 2] = 2.0 * w[0]
        out[3, 3] = 2.0 * w[0]
        out[0, 3] += w[1]
        out[3, 0] += w[1]
        out[1, 2] -= w[1]
        out[2, 1] -= w[1]


@njit(cache=True)
def eval_q1(mid, q1_kind, q1_params, z, out):
    """Subprincipal symbol values (zero when absent)."""
    n, k = model_dims(mid)
    for j in range(k):
        if q1_kind == Q1_CONST:
            out[j] = q1_params[j]
        elif q1_kind == Q1_LINEAR_X1:
            out[j] = q1_params[j] * z[0]
        else:
            out[j] = 0.0


@njit(cache=True)
def aug_dim(mid, with_action, with_mono, with_sub):
    n, k = model_dims(mid)
    d = 2 * n
    dim = d
    if with_action:
        dim += 1
    if with_mono:
        dim += d * d
    if with_sub:
        dim += 1
    return dim


@njit(cache=True)
def _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, y, out):
    n, k = model_dims(mid)
    d = 2 * n
    z = y[:d]
    f = out[:d]
    eval_field_w(mid, params, w, z, f)
    off = d
    if with_action:
        # dA/dt = xi . dx/dt
        a = 0.0
        for i in range(n):
            a += z[n + i] * f[i]
        out[off] = a
        off += 1
    if with_mono:
        hess = np.empty((d, d))
        eval_hess_w(mid, params, w, z, hess)
        m = y[off:off + d * d].reshape(d, d)
        dm = out[off:off + d * d].reshape(d, d)
        # dM/dt = J H M with J (x,xi) block structure
        for i in range(n):
            for jj in range(d):
                s_top = 0.0
                s_bot = 0.0
                for l in range(d):
                    s_top += hess[n + i, l] * m[l, jj]
                    s_bot += hess[i, l] * m[l, jj]
                dm[i, jj] = s_top
                dm[n + i, jj] = -s_bot
        off += d * d
    if with_sub:
        q1v = np.empty(k)
        eval_q1(mid, q1_kind, q1_params, z, q1v)
        s = 0.0
        for j in range(k):
            s += q1v[j] * w[j]
        out[off] = s


# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)


@njit(cache=True)
def rk45_integrate(mid, params, w, q1_kind, q1_params,
                   with_action, with_mono, with_sub,
                   y, t0, t1, rtol, atol, max_steps):
    """Integrate the augmented flow ODE in place from t0 to t1.

    Returns (status, n_steps).  y is modified in place.
    """
    dim = y.shape[0]
    span = t1 - t0
    if span == 0.0:
        return OK, 0
    direction = 1.0 if span > 0.0 else -1.0

    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    ytmp = np.empty(dim)
    ynew = np.empty(dim)

    t = t0
    h = direction * min(0.1, 0.25 * abs(span))
    nsteps = 0
    hmin = 1e-14 * abs(span) + 1e-300

    while direction * (t1 - t) > 0.0:
        if abs(h) > abs(t1 - t):
            h = t1 - t
        if abs(h) < hmin:
            return STEP_UNDERFLOW, nsteps
        if nsteps >= max_steps:
            return STEP_BUDGET, nsteps

        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, y, k1)
        for i in range(dim):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ytmp, k2)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ytmp, k3)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ytmp, k4)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ytmp, k5)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                  + _A64 * k4[i] + _A65 * k5[i])
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ytmp, k6)
        for i in range(dim):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                  + _B5 * k5[i] + _B6 * k6[i])
        _rhs(mid, params, w, q1_kind, q1_params, with_action, with_mono, with_sub, ynew, k7)

        errnorm = 0.0
        for i in range(dim):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                     + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            ay = abs(y[i])
            an = abs(ynew[i])
            sc = atol + rtol * (ay if ay > an else an)
            q = e / sc
            errnorm += q * q
        errnorm = np.sqrt(errnorm / dim)

        if errnorm <= 1.0:
            t = t + h
            for i in range(dim):
                y[i] = ynew[i]
            nsteps += 1
            fac = 5.0 if errnorm == 0.0 else 0.9 * errnorm ** -0.2
            if fac > 5.0:
                fac = 5.0
            h = h * fac
        else:
            fac = 0.9 * errnorm ** -0.2
            if fac < 0.2:
                fac = 0.2
            h = h * fac
    return OK, nsteps


@njit(cache=True)
def rk45_samples(mid, params, w, q1_kind, q1_params,
                 with_action, with_mono, with_sub,
                 y0, ts, rtol, atol, max_steps):
    """Propagate from t=0 through the monotone sample times ts.

    Returns (states, status, n_steps) where states[i] is the augmented state
    at ts[i]; on failure the remaining rows are left untouched.
    """
    dim = y0.shape[0]
    out = np.empty((ts.shape[0], dim))
    y = y0.copy()
    t = 0.0
    total = 0
    for i in range(ts.shape[0]):
        status, ns = rk45_integrate(mid, params, w, q1_kind, q1_params,
                                    with_action, with_mono, with_sub,
                                    y, t, ts[i], rtol, atol, max_steps)
        total += ns
        if status != OK:
            return out, status, total
        t = ts[i]
        for j in range(dim):
            out[i, j] = y[j]
    return out, OK, total


@njit(cache=True)
def return_distances(mid, params, z0, zstart, w, ts, rtol, atol, max_steps):
    """Distances |Phi_w^{ts[i]}(zstart) - z0| along one flow line.

    Used by the period scanner: zstart may itself be a flowed image of z0.
    """
    d = z0.shape[0]
    states, status, ns = rk45_samples(mid, params, w, Q1_NONE, np.zeros(1),
                                      False, False, False, zstart, ts,
                                      rtol, atol, max_steps)
    dists = np.empty(ts.shape[0])
    if status != OK:
        for i in range(ts.shape[0]):
            dists[i] = np.nan
        return dists, status
    for i in range(ts.shape[0]):
        s = 0.0
        for j in range(d):
            diff = states[i, j] - z0[j]
            s += diff * diff
        dists[i] = np.sqrt(s)
    return dists, OK


def warmup():
    """Trigger JIT compilation of the kernel set (no-op on the numpy path)."""
    z = np.array([1.0, 0.0])
    w = np.array([1.0])
    y = np.zeros(2 + 1 + 4 + 1)
    y[:2] = z
    y[3] = 1.0
    y[6] = 1.0
    rk45_integrate(MID_HO1D, np.zeros(1), w, Q1_CONST, np.array([1.0]),
                   True, True, True, y, 0.0, 0.1, 1e-10, 1e-10, 10000)
    rk45_samples(MID_HO2D_HL, np.zeros(1), np.array([1.0, 0.0]), Q1_NONE, np.zeros(1),
                 False, False, False, np.array([1.0, 0.0, 0.0, 1.0]),
                 np.array([0.05, 0.1]), 1e-10, 1e-10, 10000)
    return_distances(MID_CENTRAL, np.array([0.1]), np.array([1.0, 0.0, 0.0, 1.0]),
                     np.array([1.0, 0.0, 0.0, 1.0]), np.array([1.0, 0.0]),
                     np.array([0.1]), 1e-10, 1e-10, 10000)
