"""Backend selection for the hot loops.

Set ``SKIPFREE_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. If numba is not importable the numpy path is used regardless.
"""

import os

_disabled = os.environ.get("SKIPFREE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


BACKEND = "numba" if HAVE_NUMBA else "numpy"
