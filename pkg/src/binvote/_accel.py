"""Backend switch for the numeric kernels.

Set ``BINVOTE_NUMBA=0`` before import to force the pure-numpy path. Numba is
also skipped silently when it is not installed.
"""

import os

_requested = os.environ.get("BINVOTE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _requested:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a decorator returning None.

    Callers test the result for None and fall back to their numpy twin.
    """
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    return lambda fn: None


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
