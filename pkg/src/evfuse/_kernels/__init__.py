"""Kernel backend selection.

The compiled Cython module is used when it imported cleanly; otherwise
the NumPy fallback takes over. Set EVFUSE_PURE_PYTHON=1 to force the
fallback (used by the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import py_backend

if os.environ.get("EVFUSE_PURE_PYTHON"):
    backend = py_backend
else:
    try:
        from . import _native as backend  # type: ignore[no-redef]
    except ImportError:
        backend = py_backend

BACKEND_NAME: str = backend.NAME

KERNEL_INVERSE: int = py_backend.KERNEL_INVERSE
KERNEL_GAUSS: int = py_backend.KERNEL_GAUSS
KERNEL_EXPONENTIAL: int = py_backend.KERNEL_EXPONENTIAL

KERNEL_IDS: dict[str, int] = {
    "inverse": KERNEL_INVERSE,
    "gauss": KERNEL_GAUSS,
    "exponential": KERNEL_EXPONENTIAL,
}

vote_rays = backend.vote_rays
grow_labels = backend.grow_labels
weighted_fill = backend.weighted_fill
