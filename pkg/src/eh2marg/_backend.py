"""Kernel backend selection.

The hot per-step kernels in :mod:`eh2marg._kernels` are plain Python/NumPy
functions that numba can compile in nopython mode.  By default they are
JIT-compiled; setting the environment variable ``EH2MARG_NUMBA`` to ``0``
(or ``false``/``off``/``no``) before import selects the pure-NumPy fallback,
which produces the same results at interpreter speed.  The fallback is also
chosen automatically when numba is not installed.
"""

import os

__all__ = ["BACKEND", "NUMBA_ENABLED", "njit"]


def _numba_requested() -> bool:
    raw = os.environ.get("EH2MARG_NUMBA", "1").strip().lower()
    return raw not in {"0", "false", "off", "no"}


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit as _numba_njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        _numba_njit = None
    else:
        NUMBA_ENABLED = True


if NUMBA_ENABLED:

    def njit(func):
        return _numba_njit(cache=True)(func)

else:

    def njit(func):
        return func


BACKEND = "numba" if NUMBA_ENABLED else "numpy"
