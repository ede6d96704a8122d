"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``EAQMAC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("EAQMAC_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

letter_counts = _impl.letter_counts
count_keys = _impl.count_keys

