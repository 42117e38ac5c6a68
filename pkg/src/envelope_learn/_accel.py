"""Numba switch shared by every hot kernel.

Set ``ENVELOPE_LEARN_DISABLE_NUMBA=1`` (or ``true``/``yes``) before import to
force the pure-numpy paths. When numba is not installed the numpy paths are
used automatically.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_flag = os.environ.get("ENVELOPE_LEARN_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode with an on-disk cache.

    Returns None when numba is unavailable, so callers can still reach the
    uncompiled original.
    """
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
