"""Numba switch.

Set ``AGGSIM_NUMBA=0`` to force the pure-numpy kernels. When numba is not
importable the numpy path is used regardless of the flag.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSE = {"0", "false", "no", "off"}

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("AGGSIM_NUMBA", "1").strip().lower() not in _FALSE


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(func):
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def thread_count(default=None):
    """Worker cap from ``AGGSIM_THREADS``; never changes results, only speed."""
    raw = os.environ.get("AGGSIM_THREADS")
    if raw is None or raw.strip() == "":
        return default if default is not None else (os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"AGGSIM_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)
