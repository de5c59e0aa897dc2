"""Coordinate-descent kernel selection.

Prefers the compiled extension and falls back to the pure-numpy kernel
when the import fails.  Set ``TAPLASSO_BACKEND=python`` (or ``cython``)
to force a backend; the solver benchmark uses this to compare both.
"""

from __future__ import annotations

import os

import numpy as np

from . import _cd_py

_requested = os.environ.get("TAPLASSO_BACKEND", "").strip().lower()
if _requested not in ("", "cython", "python"):
    raise ImportError(f"TAPLASSO_BACKEND must be 'cython' or 'python', got {_requested!r}")

if _requested == "python":
    _impl = _cd_py
    BACKEND = "python"
else:
    try:
        from . import _cd_fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _cd_py
        BACKEND = "python"


def cd_lasso(M, y, lam, tol, max_sweeps):
    """Run the selected kernel; see ``_cd_py.cd_lasso`` for the contract."""
    M = np.asfortranarray(M, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _impl.cd_lasso(M, y, float(lam), float(tol), int(max_sweeps))
