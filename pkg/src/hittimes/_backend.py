"""Kernel backend selection.

The compiled core is used when importable; otherwise the numpy fallback.
:func:`set_backend` switches explicitly (tests, benchmarks).
"""
from . import _pycore

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

kernels = _core if _core is not None else _pycore
name = "compiled" if _core is not None else "python"


def available():
    return ["compiled", "python"] if _core is not None else ["python"]


def set_backend(which):
    """Select ``"compiled"`` or ``"python"`` kernels; returns the previous name."""
    global kernels, name
    prev = name
    if which == "compiled":
        if _core is None:
            raise RuntimeError("compiled core is not available")
        kernels = _core
    elif which == "python":
        kernels = _pycore
    else:
        raise ValueError(f"unknown backend {which!r}")
    name = which
    return prev
