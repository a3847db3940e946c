"""Scheduling kernel with a compiled core and a pure-Python fallback.

The EVLOAD_BACKEND environment variable picks the implementation at
import time: "auto" (or unset) prefers the compiled extension and falls
back silently, "cython" requires it, "python" forces the fallback.  Both
expose the same functions and produce bit-identical results.
"""

from __future__ import annotations

import os

_AUTO = ("", "auto")
_PYTHON = ("python", "py", "pure")
_CYTHON = ("cython", "c", "compiled")


def _load():
    choice = os.environ.get("EVLOAD_BACKEND", "").strip().lower()
    if choice in _PYTHON:
        from . import _schedule_py
        return _schedule_py
    if choice in _CYTHON:
        from . import _schedule_cy
        return _schedule_cy
    if choice not in _AUTO:
        raise ImportError(
            f"EVLOAD_BACKEND={choice!r} is not one of auto, python, cython"
        )
    try:
        from . import _schedule_cy
        return _schedule_cy
    except ImportError:
        from . import _schedule_py
        return _schedule_py


_impl = _load()

sample_day = _impl.sample_day
rasterize_into = _impl.rasterize_into
BACKEND_NAME = _impl.BACKEND_NAME


def active_backend() -> str:
    """Name of the kernel implementation selected at import ("python" or "cython")."""
    return BACKEND_NAME


__all__ = ["sample_day", "rasterize_into", "BACKEND_NAME", "active_backend"]
