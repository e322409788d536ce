"""Kernel backend selection.

The Cython extension is used when it was built; otherwise the pure-Python
versions are used. Set ``GOFDM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("GOFDM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

af_direct_grid = _impl.af_direct_grid
gold_bits = _impl.gold_bits
peak_search = _impl.peak_search

__all__ = ["BACKEND", "af_direct_grid", "gold_bits", "peak_search"]
