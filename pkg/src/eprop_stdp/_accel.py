"""Optional numba acceleration.

Set ``EPROP_STDP_DISABLE_NUMBA=1`` (or run without numba installed) to use the
vectorized numpy kernels instead of the compiled loop kernels.
"""
import os

_DISABLED = os.environ.get("EPROP_STDP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
