"""Select the compiled kernel extension when available.

Set the environment variable ``DDSPEC_PURE_PYTHON=1`` to force the
pure-Python fallback (useful for debugging and for the kernel benchmark).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("DDSPEC_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

y_abs2 = _impl.y_abs2
conditional_mod = _impl.conditional_mod
conditional_mod_batch = _impl.conditional_mod_batch
