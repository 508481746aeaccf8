"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. Set ``SEQBALANCE_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import importlib
import os

_FORCE_PURE = os.environ.get("SEQBALANCE_PURE", "").strip() not in ("", "0")


def load_backend(name: str):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "compiled":
        return importlib.import_module("seqbalance._ckernels")
    if name == "python":
        return importlib.import_module("seqbalance._pykernels")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        load_backend("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


if _FORCE_PURE:
    _impl = load_backend("python")
    BACKEND = "python"
else:
    try:
        _impl = load_backend("compiled")
        BACKEND = "compiled"
    except ImportError:
        _impl = load_backend("python")
        BACKEND = "python"

pigeonhole_run = _impl.pigeonhole_run
assignment = _impl.assignment
