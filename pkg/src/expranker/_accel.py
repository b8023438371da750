"""Optional numba acceleration.

Kernels are written once in numpy-compatible Python and compiled with
``numba.njit`` when it is importable. Set ``EXPRANKER_DISABLE_NUMBA=1`` to
run the same functions through the interpreter instead.
"""

import os
from functools import wraps

_disabled = os.environ.get("EXPRANKER_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _disabled:
        raise ImportError("disabled by EXPRANKER_DISABLE_NUMBA")
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def maybe_njit(func=None, **options):
    """``numba.njit`` when acceleration is on, otherwise the identity decorator.

    The undecorated Python function stays reachable as ``.py_func`` in both
    modes, so callers and benchmarks can run either path explicitly.
    """

    def decorate(f):
        if NUMBA_ENABLED:
            return numba.njit(cache=True, nogil=True, **options)(f)

        @wraps(f)
        def wrapper(*args, **kwargs):
            return f(*args, **kwargs)

        wrapper.py_func = f
        return wrapper

    if func is not None:
        return decorate(func)
    return decorate
