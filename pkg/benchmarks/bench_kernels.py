"""Loop (numba) vs vectorized numpy kernels, then an end-to-end run per backend.

    python benchmarks/bench_kernels.py [--quick]

The end-to-end part re-launches this script with KACZFACT_JIT=0 and =1 since
the backend is fixed at import time.  Expect small end-to-end differences:
dense least-squares solves dominate the factorization.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from kaczfact import kernels
from kaczfact.matrix import CSRMatrix


def best(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(rng):
    D = rng.random((2000, 1000)) * (rng.random((2000, 1000)) < 0.015)
    X = CSRMatrix.from_dense(D)
    cols = rng.choice(1000, 400, replace=False).astype(np.int64)
    panel = rng.random((1024, 1000))
    M = rng.standard_normal((400, 50))
    b = M @ rng.standard_normal(50)
    order = rng.integers(0, 400, 2000).astype(np.int64)
    w = rng.random(1000)
    u = rng.random(100)
    return {
        "csr_gather (400 of 1000 cols)": lambda K: K["csr_gather"](X.indptr, X.indices, X.data, 7, cols),
        "panel_residual_sq (1024x1000)": lambda K: K["panel_residual_sq"](X.indptr, X.indices, X.data, 0, panel.copy()),
        "rk_sweep (2000 steps, 400x50)": lambda K: K["rk_sweep"](M, b, np.zeros(50), order, 0.0),
        "weighted_draw (100 of 1000)": lambda K: K["weighted_draw"](w, u),
    }


def run_kernels():
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'loop/numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name, call in kernel_cases(rng).items():
        call(kernels.LOOP_KERNELS)  # compile outside the timing
        t_loop = best(lambda: call(kernels.LOOP_KERNELS), 20)
        t_np = best(lambda: call(kernels.NUMPY_KERNELS), 20)
        print(f"{name:34s} {t_loop * 1e6:10.1f}us {t_np * 1e6:10.1f}us {t_np / t_loop:7.2f}x")
    if not kernels.HAVE_NUMBA:
        print("(numba missing: the loop column ran as plain python)")


def end_to_end(iters):
    from kaczfact.alternating import FactorizationConfig, factorize
    from kaczfact.datagen import gen_small_synthetic
    from kaczfact.solvers import SolverSpec

    X = gen_small_synthetic(0).X
    out = {"backend": kernels.BACKEND}
    for name, spec, frac in [("als", SolverSpec("exact"), 1.0), ("ubrk-40%", SolverSpec("brk"), 0.4),
                             ("rk L=50", SolverSpec("rk", subiterations=50, epsilon=0.0), 1.0)]:
        cfg = FactorizationConfig(50, spec, row_block_fraction=frac, col_block_fraction=frac,
                                  alternating_iterations=iters, trace_interval=iters)
        factorize(X, FactorizationConfig(50, spec, alternating_iterations=2))  # warm caches / jit
        _, trace = factorize(X, cfg)
        out[name] = (trace[-1].wall_time_s, trace[-1].relative_error)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--child", type=int, default=None, help=argparse.SUPPRESS)
    ns = ap.parse_args()
    if ns.child is not None:
        print(json.dumps(end_to_end(ns.child)))
        return
    print(f"active backend: {kernels.BACKEND}\n")
    run_kernels()
    iters = 100 if ns.quick else 500
    print(f"\nend to end, small synthetic, k=50, {iters} iterations (algorithm wall time)")
    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, KACZFACT_JIT=flag)
        proc = subprocess.run([sys.executable, __file__, "--child", str(iters)], env=env,
                              capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        results[res.pop("backend")] = res
    for solver in results["numpy"]:
        row = "  ".join(f"{b}: {results[b][solver][0]:7.3f}s (err {results[b][solver][1]:.4f})" for b in results)
        print(f"  {solver:10s} {row}")


if __name__ == "__main__":
    main()
