"""Numba-jitted twins of the numpy kernel fallbacks.

Reductions run sequentially in ascending index order, which keeps every
kernel bit-deterministic for fixed inputs; fastmath stays off to preserve
that.  See :mod:`topoattack.kernels` for the cross-backend agreement levels.
"""

import numpy as np
from numba import njit

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def spmm(indptr, indices, data, dense):
    n_rows = indptr.shape[0] - 1
    n_cols = dense.shape[1]
    out = np.zeros((n_rows, n_cols), dtype=dense.dtype)
    for i in range(n_rows):
        for p in range(indptr[i], indptr[i + 1]):
            v = data[p]
            j = indices[p]
            for c in range(n_cols):
                out[i, c] += v * dense[j, c]
    return out


@njit(**_JIT)
def pair_dots(u1, v1, u2, v2, rows, cols):
    m = rows.shape[0]
    k1 = u1.shape[1]
    k2 = u2.shape[1]
    out = np.empty(m, dtype=u1.dtype)
    for p in range(m):
        r = rows[p]
        c = cols[p]
        acc = 0.0
        for t in range(k1):
            acc += u1[r, t] * v1[c, t]
        acc2 = 0.0
        for t in range(k2):
            acc2 += u2[r, t] * v2[c, t]
        out[p] = acc + acc2
    return out


@njit(**_JIT)
def symmetrize_mean(mat):
    n = mat.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            v = 0.5 * (mat[i, j] + mat[j, i])
            mat[i, j] = v
            mat[j, i] = v
    return mat


@njit(**_JIT)
def _worse(v_a, i_a, j_a, v_b, i_b, j_b):
    # total order: higher value wins, ties broken toward the smaller (i, j)
    if v_a != v_b:
        return v_a < v_b
    if i_a != i_b:
        return i_a > i_b
    return j_a > j_b


@njit(**_JIT)
def _code_excluded(codes, code):
    lo = 0
    hi = codes.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if codes[mid] < code:
            lo = mid + 1
        else:
            hi = mid
    return lo < codes.shape[0] and codes[lo] == code


@njit(**_JIT)
def topk_pairs_upper(score, excluded_codes, k):
    """Min-heap scan of the upper triangle; see the numpy twin for semantics."""
    n = score.shape[0]
    if k <= 0:
        return (
            np.empty(0, dtype=score.dtype),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
        )
    heap_v = np.empty(k, dtype=score.dtype)
    heap_i = np.empty(k, dtype=np.int64)
    heap_j = np.empty(k, dtype=np.int64)
    size = 0
    for i in range(n):
        for j in range(i + 1, n):
            if _code_excluded(excluded_codes, np.int64(i) * n + j):
                continue
            v = score[i, j] + score[j, i]
            if size < k:
                # sift up
                pos = size
                heap_v[pos] = v
                heap_i[pos] = i
                heap_j[pos] = j
                size += 1
                while pos > 0:
                    parent = (pos - 1) // 2
                    if _worse(heap_v[pos], heap_i[pos], heap_j[pos],
                              heap_v[parent], heap_i[parent], heap_j[parent]):
                        heap_v[pos], heap_v[parent] = heap_v[parent], heap_v[pos]
                        heap_i[pos], heap_i[parent] = heap_i[parent], heap_i[pos]
                        heap_j[pos], heap_j[parent] = heap_j[parent], heap_j[pos]
                        pos = parent
                    else:
                        break
            elif _worse(heap_v[0], heap_i[0], heap_j[0], v, i, j):
                # replace the current worst and sift down
                heap_v[0] = v
                heap_i[0] = i
                heap_j[0] = j
                pos = 0
                while True:
                    left = 2 * pos + 1
                    right = left + 1
                    worst = pos
                    if left < size and _worse(heap_v[left], heap_i[left], heap_j[left],
                                              heap_v[worst], heap_i[worst], heap_j[worst]):
                        worst = left
                    if right < size and _worse(heap_v[right], heap_i[right], heap_j[right],
                                               heap_v[worst], heap_i[worst], heap_j[worst]):
                        worst = right
                    if worst == pos:
                        break
                    heap_v[pos], heap_v[worst] = heap_v[worst], heap_v[pos]
                    heap_i[pos], heap_i[worst] = heap_i[worst], heap_i[pos]
                    heap_j[pos], heap_j[worst] = heap_j[worst], heap_j[pos]
                    pos = worst
    return heap_v[:size], heap_i[:size], heap_j[:size]
