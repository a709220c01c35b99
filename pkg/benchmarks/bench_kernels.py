#!/usr/bin/env python3
"""Time the recurrence kernels under both backends.

The backend is frozen at import time, so the comparison runs each side in a
fresh subprocess: once with the jit path, once with OPSPARSE_PURE_NUMPY=1.

    python3 benchmarks/bench_kernels.py            # both backends, table
    python3 benchmarks/bench_kernels.py --single   # current process only
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_one(fn, repeat: int) -> float:
    fn()  # warmup: jit compile / cache load
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite(n: int, repeat: int) -> dict:
    from opsparse import _kernels
    from opsparse.jacobi import JacobiParams, orthonormal_coeffs
    from opsparse.plan import build_plan

    params = JacobiParams(0.25, -0.5)
    p0, a, b, c = orthonormal_coeffs(params, n - 1)
    rng = np.random.default_rng(0)
    lam = np.sort(rng.uniform(-1.0, 1.0, n))
    sqw = rng.uniform(0.5, 1.5, n)
    vec = rng.standard_normal(n)
    lo = np.linspace(0.0, np.pi - 1e-3, n)
    hi = lo + 1e-3

    timings = {
        "recurrence_table": bench_one(
            lambda: _kernels.recurrence_table(p0, a, b, c, lam), repeat),
        "recurrence_last": bench_one(
            lambda: _kernels.recurrence_last(p0, a, b, c, lam), repeat),
        "sumsq_maxabs": bench_one(
            lambda: _kernels.sumsq_maxabs(p0, a, b, c, lam), repeat),
        "apply_forward": bench_one(
            lambda: _kernels.apply_forward(p0, a, b, c, lam, sqw, vec), repeat),
        "apply_adjoint": bench_one(
            lambda: _kernels.apply_adjoint(p0, a, b, c, lam, sqw, vec), repeat),
        "refine_roots(8,2)": bench_one(
            lambda: _kernels.refine_roots(p0, a, b, c, p0, a, b, c, 1.0,
                                          lo, hi, 8, 2), repeat),
        "build_plan(d=16)": bench_one(
            lambda: build_plan(params, n, degree=16), max(1, repeat // 2)),
    }
    return {"backend": _kernels.BACKEND, "n": n, "timings": timings}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--single", action="store_true",
                    help="time only the backend active in this process")
    ap.add_argument("--json", action="store_true", dest="as_json")
    args = ap.parse_args()

    if args.single:
        result = run_suite(args.n, args.repeat)
        print(json.dumps(result, indent=None if args.as_json else 2))
        return 0

    results = {}
    for backend, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, OPSPARSE_PURE_NUMPY=flag)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--single", "--json",
             "--n", str(args.n), "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True)
        results[backend] = json.loads(out.stdout)
        got = results[backend]["backend"]
        if got != backend:
            print(f"note: requested {backend}, process reports {got}",
                  file=sys.stderr)

    print(f"kernel timings, n={args.n}, best of {args.repeat} (seconds)\n")
    print(f"{'kernel':<22}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name in results["numba"]["timings"]:
        tb = results["numba"]["timings"][name]
        tn = results["numpy"]["timings"][name]
        print(f"{name:<22}{tb:>12.6f}{tn:>12.6f}{tn / tb:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
