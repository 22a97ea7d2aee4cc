"""Pure-numpy implementations of the hot kernels.

This is the fallback backend used when numba is unavailable or when
``TOPOATTACK_BACKEND=numpy`` is set.  Every function here has a jitted twin
in :mod:`topoattack.kernels.numba_backend`.
"""

import numpy as np

# Row block size for the dense scans below.  Large enough to amortize numpy
# call overhead, small enough to keep block temporaries off the heap's back.
_BLOCK_ROWS = 1024


def spmm(indptr, indices, data, dense):
    """CSR times dense, summing each row's terms in index order."""
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, dense.shape[1]), dtype=np.result_type(data, dense))
    if indices.shape[0] == 0:
        return out
    prod = data[:, None] * dense[indices, :]
    counts = np.diff(indptr)
    nonempty = counts > 0
    # np.add.reduceat misreads zero-length segments, so reduce only over the
    # nonempty rows; consecutive nonempty starts still delimit exact rows.
    out[nonempty] = np.add.reduceat(prod, indptr[:-1][nonempty], axis=0)
    return out


def pair_dots(u1, v1, u2, v2, rows, cols):
    """Evaluate ``u1 @ v1.T + u2 @ v2.T`` at selected (row, col) positions."""
    out = np.einsum("ij,ij->i", u1[rows], v1[cols])
    out += np.einsum("ij,ij->i", u2[rows], v2[cols])
    return out


def symmetrize_mean(mat):
    """In-place ``mat <- (mat + mat.T) / 2`` without a full-size temporary."""
    n = mat.shape[0]
    for i0 in range(0, n, _BLOCK_ROWS):
        i1 = min(i0 + _BLOCK_ROWS, n)
        for j0 in range(i0, n, _BLOCK_ROWS):
            j1 = min(j0 + _BLOCK_ROWS, n)
            blk = 0.5 * (mat[i0:i1, j0:j1] + mat[j0:j1, i0:i1].T)
            mat[i0:i1, j0:j1] = blk
            if j0 != i0:
                mat[j0:j1, i0:i1] = blk.T
    return mat


def topk_pairs_upper(score, excluded_codes, k):
    """Collect candidates for the k best upper-triangle pairs of a score matrix.

    The per-pair score is ``score[i, j] + score[j, i]`` for i < j.  Pairs whose
    linear code ``i * n + j`` appears in ``excluded_codes`` are skipped.
    Returns (values, rows, cols) containing at least the true top-k eligible
    pairs (possibly more); exact ordering is left to the caller.
    """
    n = score.shape[0]
    if k <= 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, np.empty(0, np.int64), np.empty(0, np.int64)
    ex_rows = excluded_codes // n
    ex_cols = excluded_codes % n
    neg_inf = -np.inf
    cand_vals, cand_rows, cand_cols = [], [], []
    cols_range = np.arange(n, dtype=np.int64)
    for i0 in range(0, n, _BLOCK_ROWS):
        i1 = min(i0 + _BLOCK_ROWS, n)
        blk = score[i0:i1, :] + score[:, i0:i1].T
        # mask diagonal and lower triangle
        rows_local = np.arange(i0, i1)
        blk[cols_range[None, :] <= rows_local[:, None]] = neg_inf
        in_blk = (ex_rows >= i0) & (ex_rows < i1)
        if in_blk.any():
            blk[ex_rows[in_blk] - i0, ex_cols[in_blk]] = neg_inf
        flat = blk.ravel()
        if k >= flat.shape[0]:
            idx = np.flatnonzero(flat > neg_inf)
        else:
            # exact block-local top-k under (value desc, flat index asc):
            # strictly-greater entries plus boundary ties in index order
            cut = np.partition(flat, flat.shape[0] - k)[flat.shape[0] - k]
            if cut == neg_inf:
                idx = np.flatnonzero(flat > neg_inf)
            else:
                gt = np.flatnonzero(flat > cut)
                eq = np.flatnonzero(flat == cut)[:k - gt.shape[0]]
                idx = np.sort(np.concatenate([gt, eq]))
        cand_vals.append(flat[idx])
        cand_rows.append(i0 + idx // n)
        cand_cols.append(idx % n)
    return (
        np.concatenate(cand_vals) if cand_vals else np.empty(0, np.float64),
        np.concatenate(cand_rows) if cand_rows else np.empty(0, np.int64),
        np.concatenate(cand_cols) if cand_cols else np.empty(0, np.int64),
    )
