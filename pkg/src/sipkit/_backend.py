"""Kernel backend selection.

The compiled extension is preferred. Setting ``SIPKIT_PURE_PYTHON=1`` in the
environment (before import) forces the pure-Python twin.
"""

import os

from . import _purepy

NAME = "python"
kernels = _purepy

if os.environ.get("SIPKIT_PURE_PYTHON", "0") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"

PURE = _purepy

_threads = max(os.cpu_count() or 1, 1)


def set_threads(n):
    """Set the worker count used by node-parallel kernels (results do not depend on it)."""
    global _threads
    _threads = max(int(n), 1)


def get_threads():
    return _threads
