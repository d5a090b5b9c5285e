"""E-prop eligibility-trace learning for LIF, STDP-LIF and Izhikevich spiking networks."""
from ._accel import backend
from .bptt import UnrolledTape, bptt_gradient, finite_difference_gradient, gradient_check
from .engine import (AdamState, Constant, Exact, Gradients, Network, SymmetricFeedback, adam_step, eprop_gradients,
                     learning_signal, lr_schedule, run_episode, train)
from .errors import (ConfigError, ContractViolation, InvalidRate, ModeUnavailable, NumericalDivergence,
                     SpikeFlipDetected)
from .experiments import (SpikeTimingConfig, SpikeTimingTask, TwoNeuronConfig, poisson_input, run_spike_timing,
                          run_two_neuron)
from .neurons import IZHIKEVICH, LIF, MODELS, STDP_LIF, IzhParams, IzhState, LifParams, LifState

__version__ = "0.1.0"

__all__ = [
    "backend", "UnrolledTape", "bptt_gradient", "finite_difference_gradient", "gradient_check",
    "AdamState", "Constant", "Exact", "Gradients", "Network", "SymmetricFeedback", "adam_step", "eprop_gradients",
    "learning_signal", "lr_schedule", "run_episode", "train",
    "ConfigError", "ContractViolation", "InvalidRate", "ModeUnavailable", "NumericalDivergence", "SpikeFlipDetected",
    "SpikeTimingConfig", "SpikeTimingTask", "TwoNeuronConfig", "poisson_input", "run_spike_timing", "run_two_neuron",
    "IZHIKEVICH", "LIF", "MODELS", "STDP_LIF", "IzhParams", "IzhState", "LifParams", "LifState",
]
