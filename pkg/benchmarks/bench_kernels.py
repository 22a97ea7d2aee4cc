#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallbacks.

Runs each hot kernel on citation-scale synthetic inputs and prints a table
of per-call times plus the speedup of the numba backend.  Use ``--large``
for a Pubmed-sized run (needs ~2 GB RAM).

    python3 benchmarks/bench_kernels.py [--large] [--repeat N]
"""

import argparse
import time

import numpy as np

from topoattack.kernels import numpy_backend

try:
    from topoattack.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_inputs(n, mean_degree, feat_cols, rng):
    nnz_half = n * mean_degree // 2
    i = rng.integers(0, n, size=nnz_half)
    j = rng.integers(0, n, size=nnz_half)
    keep = i != j
    codes = np.unique(np.concatenate([i[keep] * n + j[keep],
                                      j[keep] * n + i[keep]]))
    rows, cols = codes // n, codes % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    data = rng.random(codes.shape[0])
    dense = rng.normal(size=(n, feat_cols))
    return indptr, cols.astype(np.int64), data, dense, rows


def time_call(fn, *args, repeat=5):
    fn(*args)  # warm-up (jit compilation for the numba lane)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--large", action="store_true",
                        help="Pubmed-scale inputs instead of Cora-scale")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    n = 19717 if args.large else 2708
    score_n = 6000 if args.large else 2708
    rng = np.random.default_rng(0)
    indptr, cols, data, dense, rows = make_inputs(n, 10, 16, rng)
    u1, v1 = rng.normal(size=(n, 7)), rng.normal(size=(n, 7))
    u2, v2 = rng.normal(size=(n, 16)), rng.normal(size=(n, 16))
    score = rng.normal(size=(score_n, score_n))
    excluded = np.sort(rng.choice(score_n * score_n, size=64, replace=False))
    mat = rng.normal(size=(score_n, score_n))
    k = max(score_n // 20, 1)

    cases = [
        ("spmm", lambda b: b.spmm(indptr, cols, data, dense)),
        ("pair_dots", lambda b: b.pair_dots(u1, v1, u2, v2, rows, cols)),
        ("symmetrize_mean", lambda b: b.symmetrize_mean(mat.copy())),
        ("topk_pairs_upper", lambda b: b.topk_pairs_upper(score, excluded, k)),
    ]

    print(f"kernel benchmark  (n={n}, nnz={cols.shape[0]}, "
          f"score matrix {score_n}x{score_n}, top-k={k})")
    header = f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        t_np = time_call(lambda: call(numpy_backend), repeat=args.repeat)
        if numba_backend is None:
            print(f"{name:<18} {t_np * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_nb = time_call(lambda: call(numba_backend), repeat=args.repeat)
        print(f"{name:<18} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
              f"{t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
