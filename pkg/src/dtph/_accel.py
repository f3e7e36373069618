"""Optional numba acceleration.

Set ``DTPH_DISABLE_NUMBA=1`` in the environment to run every kernel as plain
Python/numpy. The flag is read once, at import time.
"""
import os

_flag = os.environ.get("DTPH_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = _flag not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` when acceleration is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn
