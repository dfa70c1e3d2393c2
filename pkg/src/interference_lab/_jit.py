"""Compilation switch for the hot kernels.

Kernels are written once and decorated with :func:`njit`.  When numba is
available and ``INTERFERENCE_LAB_PURE_NUMPY`` is unset (or ``0``), they are
compiled; otherwise the decorator is the identity and the same source runs as
plain Python over numpy arrays.  Both paths must produce identical results.
"""

import os

_FLAG = "INTERFERENCE_LAB_PURE_NUMPY"


def _pure_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and not _pure_requested()


def njit(fn=None, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or a no-op, depending on the flag."""
    if fn is None:
        return lambda f: njit(f, **kwargs)
    if not USE_NUMBA:
        return fn
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)
    return _numba.njit(**opts)(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
