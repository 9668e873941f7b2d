"""Kernel selection: the compiled extension when importable, else numpy.

Set ``COLLIDENET_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("COLLIDENET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        _impl = importlib.import_module("collidenet._kernels")
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

rref_inplace = _impl.rref_inplace
peel = _impl.peel


def available_backends():
    names = ["python"]
    try:
        importlib.import_module("collidenet._kernels")
        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("collidenet._kernels")
    raise ValueError(f"unknown kernel backend {name!r}")
