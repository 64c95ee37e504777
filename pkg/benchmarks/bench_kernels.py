#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

The same kernels are selected at import time by SEGTOPICS_NUMBA; this script
loads both paths explicitly, verifies they agree bit-for-bit on the benchmark
inputs, and reports wall times.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from segtopics._kernels import jit_kernels, numpy_kernels


def bench(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = {
        "sliding_window_counts": (
            rng.integers(0, 2, size=200_000).astype(np.int64),
            40,
        ),
        "gap_cosines": (
            rng.integers(0, 4, size=(400, 8000)).astype(np.int64),
            10,
        ),
        "depth_scores_kernel": (rng.uniform(0, 1, size=200_000),),
    }

    numpy_fns = numpy_kernels()
    try:
        numba_fns = jit_kernels()
    except ImportError:
        print("numba not importable; nothing to compare")
        return 1

    # warm-up compiles
    for name, case in cases.items():
        numba_fns[name](*case)

    header = f"{'kernel':<24} {'numpy/python':>14} {'numba':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, case in cases.items():
        a = np.asarray(numpy_fns[name](*case))
        b = np.asarray(numba_fns[name](*case))
        assert a.tobytes() == b.tobytes(), f"{name}: backends disagree"
        t_np = bench(numpy_fns[name], case, args.repeats)
        t_nb = bench(numba_fns[name], case, args.repeats)
        print(f"{name:<24} {t_np * 1e3:>11.2f} ms {t_nb * 1e3:>9.2f} ms {t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
