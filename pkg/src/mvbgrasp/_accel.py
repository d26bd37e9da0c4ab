"""Backend switch for the hot kernels.

Set ``MVBGRASP_NUMBA=0`` before import to force the pure-numpy path.
numba is used by default when it imports cleanly.
"""

import os

_flag = os.environ.get("MVBGRASP_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _wanted


def njit(fn):
    """Compile ``fn`` in nopython mode with caching; identity if numba is off."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def resolve(backend):
    """Map ``None``/"numba"/"numpy" to a bool: True means use the jitted kernel."""
    if backend is None:
        return USE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")
