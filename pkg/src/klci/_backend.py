"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference implementation is used.  Setting ``KLCI_BACKEND=python`` forces
the fallback, which is how the test-suite exercises both paths.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("KLCI_BACKEND", "auto").strip().lower()

kernels = _kernels_py
BACKEND = "python"

if _requested not in ("python", "py"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _requested in ("cython", "compiled"):
            raise
    else:
        kernels = _compiled
        BACKEND = "cython"

__all__ = ["kernels", "BACKEND"]
