"""Gibbs-sweep kernels: compiled extension when built, numpy fallback otherwise.

`sweep` is the kernel selected at import time. `get_kernel` gives explicit
access to either implementation (used by the equivalence tests and the
benchmark).
"""

from . import py_gibbs

try:
    from . import _gibbs as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None

sweep = _compiled.sweep if HAVE_COMPILED else py_gibbs.sweep
KERNEL_NAME = "compiled" if HAVE_COMPILED else "python"


def get_kernel(name="auto"):
    """Return a sweep function by name: 'auto', 'compiled', or 'python'."""
    if name == "auto":
        return sweep
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel is not available in this install")
        return _compiled.sweep
    if name == "python":
        return py_gibbs.sweep
    raise ValueError(f"unknown kernel {name!r}")
