"""Selects the numba or pure-numpy kernel backend.

Set ``GLYPHFORGE_DISABLE_NUMBA=1`` to force the numpy path; it is also used
automatically when numba is not importable.
"""

import os

ENV_FLAG = "GLYPHFORGE_DISABLE_NUMBA"

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def numba_disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not numba_disabled_by_env()


def njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
