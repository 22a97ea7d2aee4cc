"""Symmetric sparse matrices and the handful of operations the model needs:
construction from edge lists, symmetric degree normalization, sparse-dense
products, and edge flipping.

Matrices are immutable values; every operation returns a new matrix, which
is what lets the attacks revert a batch of flips by simply dropping it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class SparseSym:
    """Symmetric sparse matrix in sorted-coordinate (CSR-compatible) form.

    Both orientations of every off-diagonal entry are stored so that products
    need no transpose logic.  ``indptr``/``indices``/``data`` follow the usual
    CSR meaning; entries are sorted by (row, col) with no duplicates.
    """

    n: int
    indptr: np.ndarray   # int64, shape (n + 1,)
    indices: np.ndarray  # int64, shape (nnz,)
    data: np.ndarray     # float64, shape (nnz,)
    binary: bool

    _row_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.data):
            arr.setflags(write=False)

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def rows(self) -> np.ndarray:
        """Row index per stored entry (materialized lazily, then cached)."""
        cached = self._row_cache.get("rows")
        if cached is None:
            cached = np.repeat(
                np.arange(self.n, dtype=np.int64), np.diff(self.indptr)
            )
            cached.setflags(write=False)
            self._row_cache["rows"] = cached
        return cached

    def codes(self) -> np.ndarray:
        """Linear codes row * n + col per stored entry, ascending."""
        cached = self._row_cache.get("codes")
        if cached is None:
            cached = self.rows() * np.int64(self.n) + self.indices
            cached.setflags(write=False)
            self._row_cache["codes"] = cached
        return cached

    def degrees(self) -> np.ndarray:
        """Stored entries per row (= node degree for a binary adjacency)."""
        return np.diff(self.indptr)

    def has_entry(self, i: int, j: int) -> bool:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = np.searchsorted(self.indices[lo:hi], j)
        return pos < hi - lo and self.indices[lo + pos] == j

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.rows(), self.indices] = self.data
        return out

    def same_entries(self, other: "SparseSym") -> bool:
        return (
            self.n == other.n
            and self.nnz == other.nnz
            and bool(np.array_equal(self.indices, other.indices))
            and bool(np.array_equal(self.indptr, other.indptr))
            and bool(np.array_equal(self.data, other.data))
        )


def _from_codes(n: int, codes: np.ndarray, values: np.ndarray, binary: bool) -> SparseSym:
    """Assemble a SparseSym from ascending linear codes (no duplicates)."""
    rows = codes // n
    cols = codes % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return SparseSym(n=n, indptr=indptr, indices=cols.astype(np.int64),
                     data=values, binary=binary)


def build_adjacency(edges, n: int) -> SparseSym:
    """Build a binary symmetric adjacency from (u, v) pairs.

    Both orientations are stored, duplicates and reversed duplicates collapse
    to one edge.  Self-loops and out-of-range endpoints are rejected.
    """
    if n <= 0:
        raise ValueError(f"node count must be positive, got {n}")
    pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return SparseSym(
            n=n,
            indptr=np.zeros(n + 1, dtype=np.int64),
            indices=np.empty(0, dtype=np.int64),
            data=np.empty(0, dtype=np.float64),
            binary=True,
        )
    if pairs.min() < 0 or pairs.max() >= n:
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
        raise ValueError(f"edge endpoint out of range [0, {n}): {tuple(bad)}")
    if (pairs[:, 0] == pairs[:, 1]).any():
        bad = pairs[pairs[:, 0] == pairs[:, 1]][0]
        raise ValueError(f"self-loop not allowed: {tuple(bad)}")
    both = np.concatenate([pairs, pairs[:, ::-1]])
    codes = np.unique(both[:, 0] * np.int64(n) + both[:, 1])
    return _from_codes(n, codes, np.ones(codes.shape[0]), binary=True)


def normalize_adjacency(a: SparseSym) -> SparseSym:
    """Symmetric degree normalization with an added identity.

    With dhat_i = 1 + degree_i, the result holds 1/sqrt(dhat_i * dhat_j) at
    every off-diagonal entry of ``a`` and 1/dhat_i on the diagonal.
    """
    if not a.binary:
        raise ValueError("normalize_adjacency expects a binary adjacency")
    n = a.n
    dhat = (a.degrees() + 1).astype(np.float64)
    diag_codes = np.arange(n, dtype=np.int64) * np.int64(n + 1)
    codes = np.sort(np.concatenate([a.codes(), diag_codes]))
    rows = codes // n
    cols = codes % n
    values = 1.0 / np.sqrt(dhat[rows] * dhat[cols])
    return _from_codes(n, codes, values, binary=False)


def spmm(s: SparseSym, b: np.ndarray) -> np.ndarray:
    """Sparse times dense.  Rows are reduced in fixed index order."""
    b = np.asarray(b)
    if b.ndim != 2 or b.shape[0] != s.n:
        raise ValueError(f"shape mismatch: sparse is {s.n}x{s.n}, dense is {b.shape}")
    return kernels.spmm(s.indptr, s.indices, s.data, b)


def flip_pairs(a: SparseSym, pairs) -> SparseSym:
    """Toggle a batch of distinct upper-triangle pairs, mirrored symmetrically.

    Applying the same batch twice restores the original matrix.
    """
    if not a.binary:
        raise ValueError("flip is only defined for binary adjacencies")
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return a
    i, j = pairs[:, 0], pairs[:, 1]
    if (i >= j).any():
        bad = pairs[i >= j][0]
        raise ValueError(f"pairs must satisfy i < j, got {tuple(bad)}")
    if i.min() < 0 or j.max() >= a.n:
        raise ValueError(f"pair endpoint out of range [0, {a.n})")
    n = np.int64(a.n)
    toggles = np.sort(np.concatenate([i * n + j, j * n + i]))
    if np.unique(toggles).shape[0] != toggles.shape[0]:
        raise ValueError("duplicate pairs in one flip batch")
    codes = a.codes()
    present = np.isin(toggles, codes, assume_unique=True)
    kept = codes[~np.isin(codes, toggles[present], assume_unique=True)]
    new_codes = np.sort(np.concatenate([kept, toggles[~present]]))
    return _from_codes(a.n, new_codes, np.ones(new_codes.shape[0]), binary=True)


def flip_edge(a: SparseSym, i: int, j: int) -> SparseSym:
    """Toggle the single edge {i, j}; requires i < j."""
    if i == j:
        raise ValueError(f"cannot flip a diagonal entry ({i}, {j})")
    if not 0 <= i < j < a.n:
        raise ValueError(f"flip indices must satisfy 0 <= i < j < {a.n}, got ({i}, {j})")
    return flip_pairs(a, [(i, j)])


def flip_distance(a: SparseSym, b: SparseSym) -> int:
    """Number of entries where the two binary matrices differ (L0 distance)."""
    return int(np.setxor1d(a.codes(), b.codes(), assume_unique=True).shape[0])
