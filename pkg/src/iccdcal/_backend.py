"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-numpy fallback
is used otherwise.  ICCDCAL_BACKEND=compiled|python forces one explicitly
(forcing 'compiled' raises if the extension is missing).  Both backends are
bit-identical, so the choice only affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

_VALID = {"compiled", "python"}


def get_kernels(name: str | None = None):
    """Return the kernel module for `name`, or the default selection."""
    if name is None:
        name = os.environ.get("ICCDCAL_BACKEND", "").strip().lower() or None
    if name is None:
        try:
            from . import _kernels
            return _kernels
        except ImportError:
            return _kernels_py
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}, expected one of {sorted(_VALID)}")
    if name == "python":
        return _kernels_py
    from . import _kernels
    return _kernels


kernels = get_kernels()


def backend_name() -> str:
    """Name of the default backend: 'compiled' or 'python'."""
    return kernels.BACKEND_NAME
