"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
mirror is the fallback.  ``ACCW_FORCE_PY=1`` in the environment forces
the fallback (useful for the backend-equivalence tests and benchmarks).
"""

import os

from . import _kernels_py

if os.environ.get("ACCW_FORCE_PY") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

dde3_rk4 = _impl.dde3_rk4
cutin_rk4 = _impl.cutin_rk4


def backend_name():
    """Which kernel implementation is active: 'cython' or 'python'."""
    return BACKEND
