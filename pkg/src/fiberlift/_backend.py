"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``FIBERLIFT_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("FIBERLIFT_PURE", "") not in ("", "0"):
    _impl = _fallback
    COMPILED = False
else:
    try:
        from . import _kernels as _impl
        COMPILED = True
    except ImportError:
        _impl = _fallback
        COMPILED = False

emd = _impl.emd
base_orbit = _impl.base_orbit
BACKEND = "cython" if COMPILED else "python"

__all__ = ["emd", "base_orbit", "COMPILED", "BACKEND"]
