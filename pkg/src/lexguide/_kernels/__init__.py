"""Hot numeric kernels with a compiled fast path.

`_native` is an optional Cython extension. When it is missing, or when the
LEXGUIDE_PURE_PYTHON environment variable is set, the numpy/pure-Python
fallback is used instead. Both backends implement identical selection
semantics; `benchmarks/bench_kernels.py` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("LEXGUIDE_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def mmr_select(query_sims: np.ndarray, matrix: np.ndarray, k: int, lam: float) -> list[int]:
    query_sims = np.ascontiguousarray(query_sims, dtype=np.float64)
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    return _impl.mmr_select(query_sims, matrix, int(k), float(lam))


def lcs_length(a, b) -> int:
    if BACKEND == "native":
        return _impl.lcs_length(
            np.ascontiguousarray(a, dtype=np.int32),
            np.ascontiguousarray(b, dtype=np.int32),
        )
    return _impl.lcs_length(a, b)


__all__ = ["BACKEND", "mmr_select", "lcs_length"]
