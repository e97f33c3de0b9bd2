"""Backend selection for the gap-moment kernels.

The compiled extension is used when it was built; otherwise the pure-Python
module is imported. ``BACKEND`` records which one is active. Setting
``BUCKSPEC_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("BUCKSPEC_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py
        BACKEND = "python"

gap_moment = _impl.gap_moment
ordered_sum = _impl.ordered_sum
COMPENSATE_ABOVE = _kernels_py.COMPENSATE_ABOVE

__all__ = ["BACKEND", "COMPENSATE_ABOVE", "gap_moment", "ordered_sum"]
