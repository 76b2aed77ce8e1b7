"""Optional numba acceleration for the hot kernels.

Set ``KFRAMEKIT_DISABLE_NUMBA=1`` to run every kernel as plain numpy code.
The flag is read once, at import time.
"""
import os

_FLAG = os.environ.get("KFRAMEKIT_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    if DISABLED_BY_ENV:
        raise ImportError
    import numba
    USING_NUMBA = True
except ImportError:
    numba = None
    USING_NUMBA = False


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` when enabled, else return it untouched."""
    if USING_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
