"""Per-synapse eligibility vectors and traces.

An eligibility vector is the forward sensitivity of the postsynaptic hidden
state to one incoming weight.  It is one-dimensional for the LIF family and
``(eps_v, eps_u)`` for Izhikevich neurons.  The trace is the vector contracted
with the spike pseudo-derivative; for Izhikevich only ``eps_v`` enters since
the spike does not depend on ``u``.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Union

from .errors import NumericalDivergence
from .neurons import IzhParams, LifParams, stdp_reset_factor


class EligVecIzh(NamedTuple):
    eps_v: float = 0.0
    eps_u: float = 0.0


EligibilityVector = Union[float, EligVecIzh]


def lif_elig_step(eps: float, z_pre: int, params: LifParams) -> float:
    # the soft reset -z * v_thr does not depend on v, so spikes never reset eps
    return params.alpha * eps + z_pre


def stdp_lif_elig_step(eps: float, z_post: int, z_post_ref: int, z_pre: int, params: LifParams) -> float:
    return params.alpha * stdp_reset_factor(z_post, z_post_ref) * eps + z_pre


def izh_jacobian(v_post: float, z_post: int, dt: float) -> tuple[float, float, float, float]:
    """``d(v', u') / d(v, u)`` at fixed spike output, row-major."""
    keep = 1.0 - z_post
    return (
        keep * (1.0 + (0.08 * v_post + 5.0) * dt),
        -dt,
        0.004 * dt * keep,
        1.0 - 0.02 * dt,
    )


def izh_elig_step(ev: EligVecIzh, v_post: float, z_post: int, z_pre: int, params: IzhParams) -> EligVecIzh:
    j_vv, j_vu, j_uv, j_uu = izh_jacobian(v_post, z_post, params.dt)
    eps_v = j_vv * ev.eps_v + j_vu * ev.eps_u + params.dt * z_pre
    eps_u = j_uv * ev.eps_v + j_uu * ev.eps_u
    if not (math.isfinite(eps_v) and math.isfinite(eps_u)):
        raise NumericalDivergence("non-finite Izhikevich eligibility vector")
    return EligVecIzh(eps_v, eps_u)


def trace(h: float, ev: EligibilityVector) -> float:
    if isinstance(ev, EligVecIzh):
        return h * ev.eps_v
    return h * ev
