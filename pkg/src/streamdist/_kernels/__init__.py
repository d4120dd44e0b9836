"""Kernel selection: compiled extension when available, else pure Python.

Set ``STREAMDIST_PURE=1`` in the environment to force the fallback
(used by the kernel benchmark and the cross-implementation tests).
Both paths are exact and produce identical results; the compiled path
only accepts row widths up to 64, so the dispatchers below route wider
inputs to the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

if os.environ.get("STREAMDIST_PURE"):
    _ext = None
else:
    try:
        from . import _gf2kern as _ext  # type: ignore[attr-defined]
    except ImportError:
        _ext = None

HAVE_EXT = _ext is not None


def rank(rows: list[int], ncols: int) -> int:
    if _ext is not None and ncols <= 64:
        return _ext.rank(rows, ncols)
    return fallback.rank(rows, ncols)


def solve(rows: list[int], ncols: int, rhs: int) -> tuple[bool, int | None]:
    if _ext is not None and ncols <= 64:
        return _ext.solve(rows, ncols, rhs)
    return fallback.solve(rows, ncols, rhs)


def wht_inplace(a: np.ndarray) -> None:
    if _ext is not None and a.dtype == np.int64:
        _ext.wht_inplace(a)
    elif _ext is not None and a.dtype == np.float64:
        _ext.wht_inplace_f64(a)
    else:
        fallback.wht_inplace(a)
