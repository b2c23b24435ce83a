"""Kernel backend selection.

The compiled extension is used when importable; ``BRDD_BACKEND=python``
forces the numpy fallback and ``BRDD_BACKEND=cython`` makes a missing
extension an import error.
"""

import importlib
import os

from . import _kernels_py

_current = None


def _load(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("brdd._kernels")
    raise ValueError(f"unknown backend {name!r} (use 'cython' or 'python')")


def available():
    names = ["python"]
    try:
        _load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def set_backend(name):
    """Switch kernels process-wide; returns the previous backend name."""
    global _current
    prev = None if _current is None else _current.BACKEND
    _current = _load(name)
    return prev


def kernels():
    global _current
    if _current is None:
        choice = os.environ.get("BRDD_BACKEND", "auto").lower()
        if choice == "auto":
            try:
                _current = _load("cython")
            except ImportError:
                _current = _kernels_py
        else:
            _current = _load(choice)
    return _current


def name():
    return kernels().BACKEND
