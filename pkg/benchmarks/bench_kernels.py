"""Benchmark the jit-compiled integrator against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [n_orbits]

The script times a batch of long joint-flow integrations (with action and
monodromy transport) in the current process, then re-runs the same workload
in a subprocess with SEMILAT_NUMBA=0 to measure the fallback path.
"""

import os
import subprocess
import sys
import time

import numpy as np


def workload(n_orbits):
    from semilat import kernels
    from semilat.models import make_system, find_level_point
    from semilat.dynamics import flow_combination

    kernels.warmup()
    sys_ = make_system("central_quartic", params={"lam": 0.1})
    p = find_level_point(sys_, [2.0, 0.5], np.array([1.0, 0.1, 0.2, 0.6]))
    w = np.array([1.0, 0.3])
    t0 = time.perf_counter()
    for i in range(n_orbits):
        flow_combination(sys_, w, 20.0 + 0.1 * i, p, tol_flow=1e-11,
                         with_action=True, with_mono=True)
    return time.perf_counter() - t0


def main():
    n_orbits = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    if os.environ.get("_BENCH_CHILD"):
        print(f"{workload(n_orbits):.6f}")
        return

    jit_time = workload(n_orbits)
    env = dict(os.environ, SEMILAT_NUMBA="0", _BENCH_CHILD="1")
    out = subprocess.run([sys.executable, __file__, str(n_orbits)], env=env,
                         capture_output=True, text=True, check=True)
    numpy_time = float(out.stdout.strip().splitlines()[-1])
    print(f"orbits:            {n_orbits}")
    print(f"jit kernels:       {jit_time:.3f} s")
    print(f"numpy fallback:    {numpy_time:.3f} s")
    print(f"speedup:           {numpy_time / jit_time:.1f}x")


if __name__ == "__main__":
    main()
