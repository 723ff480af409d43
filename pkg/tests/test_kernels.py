import os
import subprocess
import sys

import numpy as np

from semilat import kernels

FALLBACK_SNIPPET = """
import numpy as np
from semilat import kernels
assert not kernels.NUMBA_ENABLED
from semilat.models import make_system, PhasePoint
from semilat.dynamics import flow
sys_ = make_system("ho1d")
p = PhasePoint(np.array([1.0]), np.array([0.0]))
seg = flow(sys_, [2 * np.pi], p, tol_flow=1e-12)
print(np.linalg.norm(seg.end.z - p.z), abs(seg.action - np.pi))
"""


def test_numba_enabled_by_default():
    assert os.environ.get("SEMILAT_NUMBA", "1") != "0" or not kernels.NUMBA_ENABLED


def test_pure_numpy_fallback_matches():
    env = dict(os.environ, SEMILAT_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", FALLBACK_SNIPPET], env=env,
                         capture_output=True, text=True, check=True)
    closure, action_err = (float(v) for v in out.stdout.split())
    assert closure < 1e-10
    assert action_err < 1e-10


def test_rhs_layout_roundtrip():
    # augmented state: phase point, action, monodromy, subprincipal
    dim = kernels.aug_dim(kernels.MID_HO1D, True, True, True)
    assert dim == 2 + 1 + 4 + 1


def test_eval_q0_matches_models():
    from semilat.models import make_system, PhasePoint
    sys_ = make_system("central_quartic", params={"lam": 0.1})
    z = np.array([1.0, 0.2, 0.3, 0.7])
    out = np.empty(2)
    kernels.eval_q0(sys_.mid, sys_.params, z, out)
    assert np.allclose(out, sys_.q0(PhasePoint(z[:2], z[2:])), atol=1e-14)
