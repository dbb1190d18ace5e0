"""Extension evaluation benchmark: compiled kernels against the pure fallback.

Runs the same workload in two fresh interpreters, once as installed and once
with LEVYMINMAX_DISABLE_JIT=1, so the fallback flag is exercised exactly the
way a user would set it.  Each worker warms its code path up first, so jit
compilation is excluded from the timing.

Usage: python benchmarks/bench_extension.py [--points N]
"""
import argparse
import os
import subprocess
import sys
import time


def workload(n_points: int) -> float:
    import numpy as np

    from levyminmax.cubes import partition_raw_sums
    from levyminmax.grid import DyadicGrid, RegularityClass, SmoothFn, restrict
    from levyminmax.whitney import extend

    rng = np.random.default_rng(0)
    g = DyadicGrid(5, 2, 1.0)
    data = restrict(SmoothFn(
        lambda x: float(np.sin(1.3 * x[0]) * np.cos(0.7 * x[1]))), g)
    ext = extend(data, RegularityClass(2.0))
    pts = rng.uniform(-0.9, 0.9, size=(n_points, 2))

    ext.values(pts[:32])
    partition_raw_sums(pts[:32], 0.5)

    t0 = time.perf_counter()
    ext.values(pts)
    partition_raw_sums(pts, 0.5)
    partition_raw_sums(pts, 0.25)
    return time.perf_counter() - t0


def run_worker(n_points: int, disable_jit: bool) -> float:
    env = os.environ.copy()
    if disable_jit:
        env["LEVYMINMAX_DISABLE_JIT"] = "1"
    else:
        env.pop("LEVYMINMAX_DISABLE_JIT", None)
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--points", str(n_points)],
        env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=4000)
    parser.add_argument("--worker", action="store_true",
                        help="time one pass in this interpreter and exit")
    args = parser.parse_args()

    if args.worker:
        print(f"{workload(args.points):.6f}")
        return

    from levyminmax import _kernels
    if not _kernels.JIT_ENABLED:
        print("warning: jit disabled in this environment, "
              "timing the fallback twice")
    jit_s = run_worker(args.points, disable_jit=False)
    py_s = run_worker(args.points, disable_jit=True)
    print(f"{args.points} points: numba {jit_s:.4f}s, "
          f"pure python {py_s:.4f}s, speedup x{py_s / jit_s:.1f}")


if __name__ == "__main__":
    main()
