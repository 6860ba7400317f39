"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it was built; otherwise the
numpy versions in ``_core_py`` are used.  Set ``FRACSYS_PURE_PYTHON=1`` to
force the fallback.
"""
import os

from . import _core_py

if os.environ.get("FRACSYS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _core_py

BACKEND = _impl.BACKEND
sphere_kernel = _impl.sphere_kernel
hat_weights = _impl.hat_weights
f_values = _impl.f_values
