"""Recurrent spiking network, e-prop gradients, Adam and the training loop.

The network has input, recurrent hidden and leaky readout layers.  For an
episode of ``T`` steps, with spikes ``z`` taken before each state update::

    I[t]     = x[t] @ w_in + z[t] @ w_rec
    s[t + 1] = step(s[t], z[t], I[t])
    y[t]     = kappa * y[t - 1] + z[t] @ w_out
    E        = 0.5 * sum_t |y[t] - target[t]|^2

Input and recurrent gradients follow the e-prop factorization
``dE/dw[i, j] = sum_t L[t, j] * e[t, i, j]``, with forward eligibility
traces ``e`` and a learning signal ``L``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import kernels
from .errors import ContractViolation, ModeUnavailable, NumericalDivergence
from .neurons import IZH_U_REST, IZH_V_REST, IZHIKEVICH, check_model, default_params

log = logging.getLogger(__name__)

# default N(0, 1/fan_in) weights are multiplied by this; Izhikevich currents live on a larger scale
DEFAULT_GAIN = {"lif": 1.0, "stdp-lif": 1.0, IZHIKEVICH: 20.0}


@dataclass
class Network:
    model: str
    params: object
    w_in: np.ndarray
    w_rec: np.ndarray
    w_out: np.ndarray
    kappa: float = 0.9

    def __post_init__(self):
        check_model(self.model)
        self.w_in = np.array(self.w_in, dtype=np.float64, ndmin=2)
        self.w_rec = np.array(self.w_rec, dtype=np.float64, ndmin=2)
        self.w_out = np.array(self.w_out, dtype=np.float64, ndmin=2)
        n = self.w_rec.shape[0]
        if self.w_rec.shape != (n, n) or self.w_in.shape[1] != n or self.w_out.shape[0] != n:
            raise ContractViolation(
                f"inconsistent weight shapes {self.w_in.shape}, {self.w_rec.shape}, {self.w_out.shape}"
            )
        if np.any(np.diag(self.w_rec) != 0.0):
            raise ContractViolation("w_rec must have a zero diagonal (no self-connections)")
        if not 0.0 < self.kappa < 1.0:
            raise ContractViolation("kappa must lie in (0, 1)")

    @property
    def n_in(self) -> int:
        return self.w_in.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.w_rec.shape[0]

    @property
    def n_out(self) -> int:
        return self.w_out.shape[1]

    @classmethod
    def random(cls, model: str, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator,
               params=None, kappa: float = 0.9, gain: float | None = None) -> "Network":
        """Gaussian weights with standard deviation ``gain / sqrt(fan_in)``."""
        params = default_params(model) if params is None else params
        gain = DEFAULT_GAIN[model] if gain is None else gain
        w_in = rng.normal(0.0, gain / np.sqrt(n_in), (n_in, n_hidden))
        w_rec = rng.normal(0.0, gain / np.sqrt(n_hidden), (n_hidden, n_hidden))
        np.fill_diagonal(w_rec, 0.0)
        w_out = rng.normal(0.0, 1.0 / np.sqrt(n_hidden), (n_hidden, n_out))
        return cls(model, params, w_in, w_rec, w_out, kappa)

    def weights(self) -> dict[str, np.ndarray]:
        return {"w_in": self.w_in, "w_rec": self.w_rec, "w_out": self.w_out}

    def with_weights(self, weights: dict[str, np.ndarray]) -> "Network":
        w = self.weights() | weights
        return Network(self.model, self.params, w["w_in"], w["w_rec"], w["w_out"], self.kappa)

    def initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_hidden
        if self.model == IZHIKEVICH:
            return np.full(n, IZH_V_REST), np.full(n, IZH_U_REST)
        return np.zeros(n), np.zeros(n)


@dataclass
class EpisodeRecording:
    """States, spikes and readout of one episode; traces when recorded.

    ``v``/``u`` have ``T + 1`` rows (state before each step plus the final
    state); ``z``, ``h``, ``y`` have ``T`` rows.  Trace arrays are indexed
    ``[t, presynaptic, postsynaptic]`` with presynaptic units ordered
    inputs first, then hidden neurons.
    """

    net: Network
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    v: np.ndarray | None = None
    u: np.ndarray | None = None
    h: np.ndarray | None = None
    traces: np.ndarray | None = None
    eps_v: np.ndarray | None = None
    eps_u: np.ndarray | None = None

    @property
    def recorded(self) -> bool:
        return self.v is not None

    @property
    def T(self) -> int:
        return self.z.shape[0]

    def presynaptic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z], axis=1)


def _as_spikes(input_spikes, n_in: int) -> np.ndarray:
    x = np.asarray(input_spikes, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != n_in or x.shape[0] < 1:
        raise ContractViolation(f"input spikes must have shape (T>=1, {n_in}), got {x.shape}")
    return x


def _simulate(net: Network, x: np.ndarray):
    code, prm = kernels.pack_params(net.model, net.params)
    v0, u0 = net.initial_state()
    v, u, z, h, ok = kernels.impl.simulate(code, prm, x, net.w_in, net.w_rec, v0, u0)
    if not ok:
        raise NumericalDivergence(f"{net.model} network state became non-finite")
    return v, u, z, h


def run_episode(net: Network, input_spikes, record: bool = True) -> EpisodeRecording:
    x = _as_spikes(input_spikes, net.n_in)
    v, u, z, h = _simulate(net, x)
    y = kernels.impl.readout(z, net.w_out, net.kappa)
    if not record:
        return EpisodeRecording(net, x, z, y)
    code, prm = kernels.pack_params(net.model, net.params)
    pre = np.concatenate([x, z], axis=1)
    _, e, ev, eu = kernels.impl.eligibility(code, prm, pre, v, z, h, np.zeros_like(z), True)
    return EpisodeRecording(net, x, z, y, v, u, h, e, ev, eu)


def readout_step(y: np.ndarray, z_hidden: np.ndarray, w_out: np.ndarray, kappa: float) -> np.ndarray:
    return kappa * np.asarray(y, dtype=np.float64) + np.asarray(z_hidden, dtype=np.float64) @ w_out


# learning-signal modes

@dataclass(frozen=True)
class Constant:
    c: float = 1.0


@dataclass(frozen=True)
class Exact:
    """Total derivative dE/dz through readout, recurrence and resets."""


@dataclass(frozen=True)
class SymmetricFeedback:
    """Readout error filtered backward by kappa, fed back through w_out."""


LearningSignalMode = Constant | Exact | SymmetricFeedback


def _targets(targets, T: int, n_out: int) -> np.ndarray:
    tgt = np.asarray(targets, dtype=np.float64)
    if tgt.ndim == 1:
        tgt = tgt[:, None]
    if tgt.shape != (T, n_out):
        raise ContractViolation(f"targets must have shape ({T}, {n_out}), got {tgt.shape}")
    return tgt


def learning_signal(mode: LearningSignalMode, episode: EpisodeRecording, targets=None) -> np.ndarray:
    """Learning signal ``L[t, j]`` for every hidden neuron and step."""
    net = episode.net
    T, n = episode.z.shape
    if isinstance(mode, Constant):
        return np.full((T, n), float(mode.c))
    if targets is None:
        raise ContractViolation(f"{type(mode).__name__} learning signal needs targets")
    err = episode.y - _targets(targets, T, net.n_out)
    if isinstance(mode, Exact) and not episode.recorded:
        raise ModeUnavailable("Exact learning signal requires a recorded episode")
    code, prm = kernels.pack_params(net.model, net.params)
    recurrent = isinstance(mode, Exact)
    v = episode.v if recurrent else np.zeros((T + 1, n))
    u = episode.u if recurrent else np.zeros((T + 1, n))
    h = episode.h if recurrent else np.zeros((T, n))
    L, _ = kernels.impl.learning_signal(code, prm, net.w_rec, net.w_out, net.kappa, v, u,
                                        episode.z, h, err, recurrent)
    return L


def accumulate_gradient(g: np.ndarray, L: np.ndarray, traces: np.ndarray) -> np.ndarray:
    """``g[i, j] + sum_t L[t, j] * traces[t, i, j]``."""
    L = np.asarray(L, dtype=np.float64)
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 3 or L.shape != (traces.shape[0], traces.shape[2]) or g.shape != traces.shape[1:]:
        raise ContractViolation(f"shape mismatch: g {g.shape}, L {L.shape}, traces {traces.shape}")
    return g + np.einsum("tj,tij->ij", L, traces)


@dataclass
class Gradients:
    w_in: np.ndarray
    w_rec: np.ndarray
    w_out: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"w_in": self.w_in, "w_rec": self.w_rec, "w_out": self.w_out}

    @classmethod
    def zeros_like(cls, net: Network) -> "Gradients":
        return cls(np.zeros_like(net.w_in), np.zeros_like(net.w_rec), np.zeros_like(net.w_out))


def eprop_gradients(episode: EpisodeRecording, targets, mode: LearningSignalMode = Exact()) -> Gradients:
    """Gradients of ``E`` from a recorded episode via learning signal times trace."""
    if episode.traces is None:
        raise ModeUnavailable("eprop_gradients needs an episode recorded with traces")
    net = episode.net
    L = learning_signal(mode, episode, targets)
    g = accumulate_gradient(np.zeros(episode.traces.shape[1:]), L, episode.traces)
    err = episode.y - _targets(targets, episode.T, net.n_out)
    g_out = kernels.impl.filtered_spikes_gradient(episode.z, err, net.kappa)
    w_rec = g[net.n_in:].copy()
    np.fill_diagonal(w_rec, 0.0)
    return Gradients(g[: net.n_in].copy(), w_rec, g_out)


@dataclass
class EpisodeResult:
    grads: Gradients
    loss: float
    mse: float
    spike_count: float


def episode_gradients(net: Network, input_spikes, targets, mode: LearningSignalMode = Exact()) -> EpisodeResult:
    """Fast path: simulate, compute the learning signal, then run the eligibility sweep.

    Traces are never stored; each one is multiplied into the gradient as it
    is produced.
    """
    x = _as_spikes(input_spikes, net.n_in)
    v, u, z, h = _simulate(net, x)
    y = kernels.impl.readout(z, net.w_out, net.kappa)
    err = y - _targets(targets, x.shape[0], net.n_out)
    code, prm = kernels.pack_params(net.model, net.params)
    if isinstance(mode, Constant):
        L = np.full(z.shape, float(mode.c))
    else:
        L, _ = kernels.impl.learning_signal(code, prm, net.w_rec, net.w_out, net.kappa, v, u, z, h, err,
                                            isinstance(mode, Exact))
    pre = np.concatenate([x, z], axis=1)
    g, _, _, _ = kernels.impl.eligibility(code, prm, pre, v, z, h, L, False)
    w_rec = g[net.n_in:].copy()
    np.fill_diagonal(w_rec, 0.0)
    grads = Gradients(g[: net.n_in].copy(), w_rec, kernels.impl.filtered_spikes_gradient(z, err, net.kappa))
    return EpisodeResult(grads, 0.5 * float(np.sum(err * err)), float(np.mean(err * err)), float(z.sum()))


# optimizer

@dataclass
class AdamState:
    lr: float = 0.003
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, grads: dict[str, np.ndarray], weights: dict[str, np.ndarray]):
    """One bias-corrected Adam update; returns ``(state, new_weights)``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalDivergence(f"non-finite gradient for {name}")
    t = state.step_count + 1
    m, v, new = {}, {}, {}
    for name, w in weights.items():
        g = np.asarray(grads.get(name, np.zeros_like(w)), dtype=np.float64)
        m[name] = state.beta1 * state.m.get(name, np.zeros_like(w)) + (1.0 - state.beta1) * g
        v[name] = state.beta2 * state.v.get(name, np.zeros_like(w)) + (1.0 - state.beta2) * g * g
        m_hat = m[name] / (1.0 - state.beta1**t)
        v_hat = v[name] / (1.0 - state.beta2**t)
        new[name] = w - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    out = AdamState(state.lr, state.beta1, state.beta2, state.eps_hat, t, m, v)
    return out, new


def lr_schedule(epoch: int, lr0: float = 0.003, decay: float = 0.7, every: int = 100) -> float:
    if epoch < 0:
        raise ContractViolation("epoch must be non-negative")
    return lr0 * decay ** (epoch // every)


# training

class Task(Protocol):
    T: int

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """One ``(input_spikes, targets)`` pair."""


@dataclass
class TrainingCurve:
    """Per-epoch mean MSE and hidden firing rate (Hz).

    Row ``e`` describes the network after ``e`` updates, measured on the
    batch drawn for epoch ``e``; there are ``epochs + 1`` rows.
    """

    mse: np.ndarray
    rate_hz: np.ndarray


def firing_rate_hz(spike_count: float, n_hidden: int, T: int, dt_ms: float = 1.0) -> float:
    return 1000.0 * spike_count / (n_hidden * T * dt_ms)


def train(net: Network, task: Task, epochs: int, batch_size: int = 16,
          mode: LearningSignalMode = Exact(), rng: np.random.Generator | None = None,
          lr0: float = 0.003, decay: float = 0.7, decay_every: int = 100,
          schedule: Callable[[int], float] | None = None) -> tuple[Network, TrainingCurve]:
    """Batch e-prop training with Adam; each epoch is one update on a fresh batch."""
    if epochs < 0 or batch_size < 1:
        raise ContractViolation("epochs must be >= 0 and batch_size >= 1")
    rng = np.random.default_rng() if rng is None else rng
    schedule = schedule or (lambda e: lr_schedule(e, lr0, decay, decay_every))
    adam = AdamState(lr=schedule(0))
    mse = np.zeros(epochs + 1)
    rate = np.zeros(epochs + 1)
    for epoch in range(epochs + 1):
        batch = [task.sample(rng) for _ in range(batch_size)]
        results = [episode_gradients(net, x, tgt, mode) for x, tgt in batch]
        mse[epoch] = np.mean([r.mse for r in results])
        rate[epoch] = np.mean([firing_rate_hz(r.spike_count, net.n_hidden, task.T) for r in results])
        if epoch == epochs:
            break
        grads = {}
        for name in ("w_in", "w_rec", "w_out"):
            # fixed reduction order keeps runs bit-reproducible
            acc = np.zeros_like(getattr(net, name))
            for r in results:
                acc += getattr(r.grads, name)
            grads[name] = acc / batch_size
        adam.lr = schedule(epoch)
        adam, weights = adam_step(adam, grads, net.weights())
        np.fill_diagonal(weights["w_rec"], 0.0)
        net = net.with_weights(weights)
        if epoch % 50 == 0:
            log.debug("epoch %d mse %.5f rate %.2f Hz", epoch, mse[epoch], rate[epoch])
    return net, TrainingCurve(mse, rate)
