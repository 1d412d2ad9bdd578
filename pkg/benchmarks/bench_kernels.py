"""Compare the compiled and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on
inputs sized like a Case 1 solve (60 charges, 4M+1 = 1441 samples, N0 = 80),
then a full solve is timed under each backend in a fresh interpreter.
"""
import os
import subprocess
import sys
import timeit

import numpy as np

from cavityrh import _kernels_py

try:
    from cavityrh import _kernels
except ImportError:
    _kernels = None


def _inputs(rng):
    x = np.exp(2j * np.pi * np.arange(1441) / 1441) * 6 - 10j
    Z = (rng.normal(size=60) + 1j * rng.normal(size=60)) - 10j
    Q = rng.normal(size=60)
    c = rng.normal(size=60) + 1j * rng.normal(size=60)
    w = 0.3 * np.exp(2j * np.pi * np.arange(1441) / 1441)
    u = rng.normal(size=321) + 1j * rng.normal(size=321)
    a = rng.normal(size=161) + 1j * rng.normal(size=161)
    return x, Z, Q, c, w, u, a


def bench_kernels(repeat=20):
    rng = np.random.default_rng(0)
    x, Z, Q, c, w, u, a = _inputs(rng)
    cases = {
        "charge_sums": lambda m: m.charge_sums(x, Z, Q, -10j),
        "horner": lambda m: m.horner(c, w),
        "conj_correlate": lambda m: m.conj_correlate(u, a, -80, 80),
    }
    rows = []
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=5, repeat=repeat)) / 5
        if _kernels is not None:
            t_c = min(timeit.repeat(lambda: fn(_kernels), number=5, repeat=repeat)) / 5
            r_py, r_c = fn(_kernels_py), fn(_kernels)
            err = max(float(np.abs(p - q).max() / np.abs(p).max())
                      for p, q in zip(np.atleast_2d(r_py), np.atleast_2d(r_c)))
        else:
            t_c, err = float("nan"), float("nan")
        rows.append((name, t_py, t_c, err))
    return rows


_SOLVE = """
import time
from cavityrh import MaterialParams, SolverConfig, composite_ellipse, solve, BACKEND
spec = composite_ellipse(10.0, x0=500.0)
solve(spec, MaterialParams(), SolverConfig(x0=500.0))
t = time.perf_counter()
for _ in range(5):
    s = solve(spec, MaterialParams(), SolverConfig(x0=500.0))
    s.cavity([0.1 * k for k in range(720)])
print(BACKEND, (time.perf_counter() - t) / 5)
"""


def bench_solve():
    out = []
    for backend in ("compiled", "python"):
        env = dict(os.environ, CAVITYRH_BACKEND=backend)
        res = subprocess.run([sys.executable, "-c", _SOLVE], env=env, capture_output=True,
                             text=True, check=True)
        name, t = res.stdout.split()
        out.append((backend, name, float(t)))
    return out


def main():
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>10}{'rel diff':>12}")
    for name, t_py, t_c, err in bench_kernels():
        print(f"{name:<16}{t_py * 1e3:>12.4f}{t_c * 1e3:>15.4f}{t_py / t_c:>10.2f}{err:>12.2e}")
    print()
    for requested, used, t in bench_solve():
        print(f"full Case 1 solve + cavity trace, backend={used:<9} {t * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
