"""Episode kernels with a compiled and a pure-numpy implementation.

``impl`` is the compiled loop module when numba is usable, otherwise the
vectorized numpy module; both stay importable for cross-checking.
"""
import numpy as np

from .._accel import HAVE_NUMBA, backend
from ..neurons import IZHIKEVICH, MODEL_CODES, IzhParams, LifParams
from . import _loops, _vectorized

impl = _loops if HAVE_NUMBA else _vectorized


def pack_params(model: str, params) -> tuple[int, np.ndarray]:
    """Model code and flat parameter vector in kernel layout."""
    code = MODEL_CODES[model]
    if model == IZHIKEVICH:
        p: IzhParams = params
        prm = [0.0, 1.0, 0.0, p.gamma, p.dt, p.v_spike, p.v_reset, p.u_jump]
    else:
        q: LifParams = params
        prm = [q.alpha, q.v_thr, float(q.dt_ref), q.gamma, 1.0, 30.0, -65.0, 2.0]
    return code, np.asarray(prm, dtype=np.float64)


__all__ = ["impl", "pack_params", "backend", "HAVE_NUMBA", "_loops", "_vectorized"]
