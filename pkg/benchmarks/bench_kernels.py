"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import sys
import time

import numpy as np

from lexguide._kernels import _fallback

try:
    from lexguide._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_mmr(n, dim, k, repeats):
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(n, dim))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    query = rng.normal(size=dim)
    query /= np.linalg.norm(query)
    sims = matrix @ query
    rows = []
    python_time = timeit(lambda: _fallback.mmr_select(sims, matrix, k, 0.6), repeats)
    rows.append(("python", python_time, None))
    if _native is not None:
        native_time = timeit(lambda: _native.mmr_select(sims, matrix, k, 0.6), repeats)
        rows.append(("native", native_time, python_time / native_time))
        assert _native.mmr_select(sims, matrix, k, 0.6) == _fallback.mmr_select(sims, matrix, k, 0.6)
    return rows


def bench_lcs(length, repeats):
    rng = np.random.default_rng(1)
    a32 = rng.integers(0, 50, size=length).astype(np.int32)
    b32 = rng.integers(0, 50, size=length).astype(np.int32)
    a_list, b_list = list(a32), list(b32)
    rows = []
    python_time = timeit(lambda: _fallback.lcs_length(a_list, b_list), repeats)
    rows.append(("python", python_time, None))
    if _native is not None:
        native_time = timeit(lambda: _native.lcs_length(a32, b32), repeats)
        rows.append(("native", native_time, python_time / native_time))
        assert _native.lcs_length(a32, b32) == _fallback.lcs_length(a_list, b_list)
    return rows


def print_table(title, rows):
    print(f"\n{title}")
    print(f"  {'backend':<8} {'best (ms)':>10} {'speedup':>8}")
    for backend, seconds, speedup in rows:
        extra = f"{speedup:7.1f}x" if speedup else "       -"
        print(f"  {backend:<8} {seconds * 1000:>10.2f} {extra}")


def main():
    quick = "--quick" in sys.argv
    n, k, length, repeats = (500, 120, 400, 2) if quick else (2000, 500, 1500, 3)
    if _native is None:
        print("compiled kernels not built; showing fallback timings only")
    print_table(f"greedy MMR selection (n={n}, dim=64, k={k})", bench_mmr(n, 64, k, repeats))
    print_table(f"LCS length ({length} x {length} tokens)", bench_lcs(length, repeats))


if __name__ == "__main__":
    main()
