"""Discrete-time LIF, STDP-LIF and Izhikevich neurons.

Every step follows the same order: the spike ``z`` is read off the current
state, then the state update consumes ``z``.  The functions here act on a
single neuron and return new state objects; the batched network kernels in
:mod:`eprop_stdp.kernels` implement the same equations over arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ContractViolation, NumericalDivergence

LIF = "lif"
STDP_LIF = "stdp-lif"
IZHIKEVICH = "izhikevich"
MODELS = (LIF, STDP_LIF, IZHIKEVICH)
MODEL_CODES = {LIF: 0, STDP_LIF: 1, IZHIKEVICH: 2}

# Izhikevich regular-spiking constants (v' = 0.04 v^2 + 5 v + 140 - u + I, u' = 0.004 v - 0.02 u)
IZH_V_REST = -70.0
IZH_U_REST = -14.0


def check_model(model: str) -> str:
    if model not in MODEL_CODES:
        raise ContractViolation(f"unknown neuron model {model!r}; expected one of {MODELS}")
    return model


@dataclass(frozen=True)
class LifParams:
    alpha: float = 0.9
    v_thr: float = 0.5
    dt_ref: int = 3
    gamma: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolation("alpha must lie in (0, 1)")
        if not self.v_thr > 0.0:
            raise ContractViolation("v_thr must be positive")
        if int(self.dt_ref) != self.dt_ref or self.dt_ref < 0:
            raise ContractViolation("dt_ref must be a non-negative integer")
        if not self.gamma > 0.0:
            raise ContractViolation("gamma must be positive")
        object.__setattr__(self, "dt_ref", int(self.dt_ref))


@dataclass(frozen=True)
class IzhParams:
    dt: float = 1.0
    gamma: float = 0.3
    v_spike: float = 30.0
    v_reset: float = -65.0
    u_jump: float = 2.0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ContractViolation("dt must be positive")
        if not self.gamma > 0.0:
            raise ContractViolation("gamma must be positive")


@dataclass(frozen=True)
class LifState:
    """Membrane potential plus refractory bookkeeping.

    ``last_spike_age`` counts completed steps since the most recent spike and
    saturates at ``dt_ref``; the neuron is refractory while it is below
    ``dt_ref``.  ``spike_history`` holds the last ``dt_ref + 1`` outputs,
    oldest first.
    """

    v: float = 0.0
    last_spike_age: int = 0
    spike_history: tuple = field(default=(0,))

    @classmethod
    def initial(cls, params: LifParams, v: float = 0.0) -> "LifState":
        return cls(float(v), params.dt_ref, (0,) * (params.dt_ref + 1))

    def refractory(self, params: LifParams) -> bool:
        return self.last_spike_age < params.dt_ref


@dataclass(frozen=True)
class IzhState:
    v: float = IZH_V_REST
    u: float = IZH_U_REST


def _finite(*values: float) -> None:
    for x in values:
        if not math.isfinite(x):
            raise NumericalDivergence(f"non-finite neuron state ({x})")


def _advance(state: LifState, z: int, v_new: float, params: LifParams) -> LifState:
    _finite(v_new)
    age = 0 if z else min(state.last_spike_age + 1, params.dt_ref)
    history = state.spike_history[1:] + (int(z),)
    return LifState(v_new, age, history)


def lif_spike(state: LifState, params: LifParams) -> int:
    if state.refractory(params):
        return 0
    return int(state.v >= params.v_thr)


def lif_step(state: LifState, z: int, current: float, params: LifParams) -> LifState:
    v_new = params.alpha * state.v + current - z * params.v_thr
    return _advance(state, z, v_new, params)


def stdp_reset_factor(z: int, z_ref: int) -> float:
    # clamped so a simultaneous spike and refractory end still gives a single hard reset
    return max(0.0, 1.0 - z - z_ref)


def stdp_lif_z_ref(state: LifState, z: int) -> int:
    """Output ``dt_ref`` steps before the step that emitted ``z``."""
    return (state.spike_history[1:] + (int(z),))[0]


def stdp_lif_step(state: LifState, z: int, current: float, params: LifParams) -> LifState:
    z_ref = stdp_lif_z_ref(state, z)
    v_new = params.alpha * state.v * stdp_reset_factor(z, z_ref) + current
    return _advance(state, z, v_new, params)


def izh_spike(state: IzhState, params: IzhParams | None = None) -> int:
    v_spike = 30.0 if params is None else params.v_spike
    return int(state.v >= v_spike)


def izh_step(state: IzhState, z: int, current: float, params: IzhParams) -> IzhState:
    v_t = state.v - (state.v - params.v_reset) * z
    u_t = state.u + params.u_jump * z
    dt = params.dt
    # v^2 / 25 rather than 0.04 v^2 keeps the rest state an exact fixed point
    v_new = v_t + dt * (v_t * v_t / 25.0 + 5.0 * v_t + 140.0 - u_t + current)
    u_new = u_t + dt * (0.004 * v_t - 0.02 * u_t)
    _finite(v_new, u_new)
    return IzhState(v_new, u_new)


def triangular(v: float, v_thr: float, gamma: float) -> float:
    return gamma * max(0.0, 1.0 - abs((v - v_thr) / v_thr))


def lif_pseudo_derivative(state: LifState, params: LifParams) -> float:
    if state.refractory(params):
        return 0.0
    return triangular(state.v, params.v_thr, params.gamma)


def stdp_lif_pseudo_derivative(state: LifState, params: LifParams) -> float:
    # negative during refractoriness: late presynaptic spikes weaken the synapse
    if state.refractory(params):
        return -params.gamma
    return triangular(state.v, params.v_thr, params.gamma)


def izh_pseudo_derivative(state: IzhState, params: IzhParams) -> float:
    return params.gamma * math.exp((min(state.v, params.v_spike) - params.v_spike) / 30.0)


# Uniform per-model interface used by the two-neuron experiments and the oracle.

def initial_state(model: str, params):
    if check_model(model) == IZHIKEVICH:
        return IzhState()
    return LifState.initial(params)


def spike(model: str, state, params) -> int:
    if model == IZHIKEVICH:
        return izh_spike(state, params)
    return lif_spike(state, params)


def pseudo_derivative(model: str, state, params) -> float:
    if model == IZHIKEVICH:
        return izh_pseudo_derivative(state, params)
    if model == STDP_LIF:
        return stdp_lif_pseudo_derivative(state, params)
    return lif_pseudo_derivative(state, params)


def step(model: str, state, z: int, current: float, params):
    if model == IZHIKEVICH:
        return izh_step(state, z, current, params)
    if model == STDP_LIF:
        return stdp_lif_step(state, z, current, params)
    return lif_step(state, z, current, params)


def default_params(model: str, **overrides):
    cls = IzhParams if check_model(model) == IZHIKEVICH else LifParams
    return cls(**overrides)
