"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set FLMGOF_PURE_PYTHON=1 to force the NumPy fallback (useful for
benchmarking and for environments without a compiler).
"""

import os

from . import _angles_np

if os.environ.get("FLMGOF_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _angles_np
    BACKEND = "numpy"
else:
    try:
        from . import _angles_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _angles_np
        BACKEND = "numpy"

angle_sums_packed = _impl.angle_sums_packed


def backend() -> str:
    """Name of the active kernel backend ('cython' or 'numpy')."""
    return BACKEND
