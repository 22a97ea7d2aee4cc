"""Hot-kernel dispatch.

Two interchangeable backends implement the inner loops that dominate
runtime: a numba-jitted one and a pure-numpy one.  Selection is driven by
the ``TOPOATTACK_BACKEND`` environment variable:

* ``numba``  - require the jitted backend, raise if numba is missing
* ``numpy``  - force the pure-numpy fallback
* unset/``auto`` - use numba when importable, numpy otherwise

Each backend is bit-deterministic on its own (fixed reduction order per
output element).  Across backends, ``symmetrize_mean`` is bit-identical,
``spmm``/``pair_dots`` agree to float rounding (numpy reduces pairwise,
the jitted loops sequentially), and ``topk_pairs_upper`` selects identical
pairs for identical score matrices.

Kernel contracts:

* ``spmm(indptr, indices, data, dense)``: CSR x dense product.
* ``pair_dots(u1, v1, u2, v2, rows, cols)``: rowwise dot products of two
  low-rank factorizations, evaluated at (rows, cols) positions.
* ``symmetrize_mean(mat)``: in-place (mat + mat.T) / 2.
* ``topk_pairs_upper(score, excluded_codes, k)``: candidate (value, i, j)
  triples covering the k largest coupled scores ``score[i,j] + score[j,i]``
  over the strict upper triangle; ``excluded_codes`` is a *sorted* int64
  array of ``i * n + j`` codes to skip.  Callers order the candidates.
"""

import os

from . import numpy_backend

_requested = os.environ.get("TOPOATTACK_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"TOPOATTACK_BACKEND must be 'numba', 'numpy' or 'auto', got {_requested!r}"
    )

if _requested == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"

spmm = _impl.spmm
pair_dots = _impl.pair_dots
symmetrize_mean = _impl.symmetrize_mean
topk_pairs_upper = _impl.topk_pairs_upper

__all__ = [
    "BACKEND",
    "spmm",
    "pair_dots",
    "symmetrize_mean",
    "topk_pairs_upper",
]
