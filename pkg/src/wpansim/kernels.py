"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting
``WPANSIM_PURE_PYTHON=1`` forces the pure-Python path.
"""

from __future__ import annotations

import os

from . import _kernels

if os.environ.get("WPANSIM_PURE_PYTHON"):
    crc16 = _kernels.crc16
    BACKEND = "python"
else:
    try:
        from ._speedups import crc16
        BACKEND = "cython"
    except ImportError:  # extension not built
        crc16 = _kernels.crc16
        BACKEND = "python"

__all__ = ["crc16", "BACKEND"]
