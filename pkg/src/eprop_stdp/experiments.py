"""Two-neuron STDP demonstrations and the spike-timing regression task."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import neurons as nm
from .eligibility import EligVecIzh, izh_elig_step, lif_elig_step, stdp_lif_elig_step, trace
from .engine import Exact, Network, TrainingCurve, train
from .errors import ContractViolation, InvalidRate

NEVER = None

# the schedule draws currents on the Izhikevich scale; LIF-family neurons receive them scaled by this factor
LIF_CURRENT_SCALE = 0.03
TWO_NEURON_IZH_DT = 0.1


def two_phase_input_schedule(t: int, T: int, t_zi, t_zo, rng: np.random.Generator,
                             phase_split: float = 0.45) -> tuple[float, float]:
    """External currents ``(I_pre, I_post)`` for step ``t``.

    Phase one (``t < phase_split * T``) ramps the postsynaptic drive after each
    presynaptic spike so post follows pre; phase two mirrors the roles.
    ``t_zi``/``t_zo`` are the latest pre/post spike times or ``None``.
    """
    last_pre = -math.inf if t_zi is None else t_zi
    last_post = -math.inf if t_zo is None else t_zo
    if t < phase_split * T:
        i_pre = rng.uniform(1.0, 15.0)
        i_post = rng.uniform(1.0, 5.0)
        if last_pre > last_post:
            i_post = rng.uniform(0.0, 1.0) * (t - last_pre)
    else:
        i_pre = rng.uniform(1.0, 5.0)
        i_post = rng.uniform(1.0, 15.0)
        if last_post > last_pre:
            i_pre = rng.uniform(0.0, 1.0) * (t - last_post)
    return i_pre, i_post


@dataclass
class TwoNeuronConfig:
    model: str = nm.IZHIKEVICH
    T: int = 1000
    phase_split: float = 0.45
    seed: int = 0
    weight: float = 0.1
    learning_signal: float = 1.0
    current_scale: float | None = None
    izh_dt: float = TWO_NEURON_IZH_DT
    alpha: float = 0.9
    dt_ref: int = 3
    gamma: float = 0.3

    def __post_init__(self):
        nm.check_model(self.model)
        if not 0.0 < self.phase_split < 1.0:
            raise ContractViolation("phase_split must lie in (0, 1)")
        if self.T < 10:
            raise ContractViolation("T must be at least 10")

    @property
    def params(self):
        if self.model == nm.IZHIKEVICH:
            return nm.IzhParams(dt=self.izh_dt, gamma=self.gamma)
        return nm.LifParams(alpha=self.alpha, dt_ref=self.dt_ref, gamma=self.gamma)

    @property
    def scale(self) -> float:
        if self.current_scale is not None:
            return self.current_scale
        return 1.0 if self.model == nm.IZHIKEVICH else LIF_CURRENT_SCALE

    @property
    def split_step(self) -> int:
        """First step of phase two."""
        return math.ceil(self.phase_split * self.T)


@dataclass
class TwoNeuronRun:
    config: TwoNeuronConfig
    v_pre: np.ndarray
    v_post: np.ndarray
    z_pre: np.ndarray
    z_post: np.ndarray
    eps_v: np.ndarray
    eps_u: np.ndarray
    trace: np.ndarray
    grad_cum: np.ndarray

    def phase_stats(self) -> dict:
        """Shape statistics of the cumulative gradient and the trace."""
        s = self.config.split_step
        k = min(s, len(self.grad_cum) - 1)
        g = self.grad_cum
        return {
            "grad_start": float(g[0]),
            "grad_at_split": float(g[k]),
            "grad_peak_phase1": float(g[:k + 1].max()),
            "grad_end": float(g[-1]),
            "rises_then_falls": bool(g[k] > g[0] and g[-1] < g[:k + 1].max()),
            "negative_steps_phase1": int(np.sum(self.trace[:s] < 0)),
            "negative_steps_phase2": int(np.sum(self.trace[s:] < 0)),
            "negative_only_in_phase2": bool(np.all(self.trace[:s] >= 0) and np.any(self.trace[s:] < 0)),
        }


def run_two_neuron(cfg: TwoNeuronConfig) -> TwoNeuronRun:
    """Pre neuron -> weak synapse -> post neuron, driven by the two-phase schedule.

    The learning signal is constant, so the cumulative gradient is the running
    sum of the synapse's eligibility trace times that constant.
    """
    model, p = cfg.model, cfg.params
    rng = np.random.default_rng(cfg.seed)
    pre = nm.initial_state(model, p)
    post = nm.initial_state(model, p)
    ev = EligVecIzh() if model == nm.IZHIKEVICH else 0.0
    T = cfg.T
    out = {k: np.zeros(T) for k in ("v_pre", "v_post", "z_pre", "z_post", "eps_v", "eps_u", "trace", "grad_cum")}
    t_zi = t_zo = NEVER
    cum = 0.0
    for t in range(T):
        z_i = nm.spike(model, pre, p)
        z_o = nm.spike(model, post, p)
        h = nm.pseudo_derivative(model, post, p)
        if z_i:
            t_zi = t
        if z_o:
            t_zo = t
        i_pre, i_post = two_phase_input_schedule(t, T, t_zi, t_zo, rng, cfg.phase_split)
        e = trace(h, ev)
        cum += cfg.learning_signal * e
        out["v_pre"][t], out["v_post"][t] = pre.v, post.v
        out["z_pre"][t], out["z_post"][t] = z_i, z_o
        if model == nm.IZHIKEVICH:
            out["eps_v"][t], out["eps_u"][t] = ev
        else:
            out["eps_v"][t], out["eps_u"][t] = ev, np.nan
        out["trace"][t], out["grad_cum"][t] = e, cum
        if model == nm.IZHIKEVICH:
            ev = izh_elig_step(ev, post.v, z_o, z_i, p)
        elif model == nm.STDP_LIF:
            ev = stdp_lif_elig_step(ev, z_o, nm.stdp_lif_z_ref(post, z_o), z_i, p)
        else:
            ev = lif_elig_step(ev, z_i, p)
        pre = nm.step(model, pre, z_i, cfg.scale * i_pre, p)
        post = nm.step(model, post, z_o, cfg.scale * i_post + cfg.weight * z_i, p)
    return TwoNeuronRun(cfg, **out)


# spike-timing task

def poisson_input(rate_hz: float, T: int, dt_ms: float = 1.0, rng: np.random.Generator | None = None,
                  n: int = 1) -> np.ndarray:
    """Bernoulli spike train with ``p = rate_hz * dt`` per step, shape ``(T, n)``."""
    p = rate_hz * dt_ms * 1e-3
    if not 0.0 <= p <= 1.0:
        raise InvalidRate(f"rate {rate_hz} Hz at dt {dt_ms} ms gives p = {p}")
    rng = np.random.default_rng() if rng is None else rng
    return (rng.random((T, n)) < p).astype(np.float64)


def spike_timing_target(t: int, t_in) -> float:
    """``1 / (1 + t - t_in)``, or 0 before the first input spike (``t_in is None``)."""
    if t_in is None:
        return 0.0
    if t < t_in:
        raise ContractViolation("t must not precede the input spike time")
    return 1.0 / (1.0 + t - t_in)


def spike_timing_targets(spikes: np.ndarray) -> np.ndarray:
    """Target series for a single input channel."""
    spikes = np.asarray(spikes).reshape(-1)
    out = np.zeros(spikes.shape[0])
    t_in = None
    for t, s in enumerate(spikes):
        if s:
            t_in = t
        out[t] = spike_timing_target(t, t_in)
    return out


@dataclass
class SpikeTimingTask:
    T: int = 400
    rate_hz: float = 25.0
    dt_ms: float = 1.0

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        x = poisson_input(self.rate_hz, self.T, self.dt_ms, rng)
        return x, spike_timing_targets(x[:, 0])[:, None]


@dataclass
class SpikeTimingConfig:
    model: str = nm.STDP_LIF
    rate_hz: float = 25.0
    T: int = 400
    v_thr: float = 0.5
    epochs: int = 1000
    batch: int = 16
    lr0: float = 0.003
    decay: float = 0.7
    decay_every: int = 100
    n_runs: int = 100
    seed: int = 0
    n_hidden: int = 16
    kappa: float = 0.9
    alpha: float = 0.9
    dt_ref: int = 3
    gamma: float = 0.3
    workers: int = 1

    def __post_init__(self):
        if nm.check_model(self.model) == nm.IZHIKEVICH:
            raise ContractViolation("the spike-timing task compares LIF and STDP-LIF networks")
        for name in ("rate_hz", "T", "v_thr", "batch", "lr0", "decay", "decay_every", "n_runs", "n_hidden"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.epochs < 0:
            raise ContractViolation("epochs must be non-negative")
        if self.rate_hz * 1e-3 > 1.0:
            raise InvalidRate("rate * dt exceeds 1")


@dataclass
class SpikeTimingSummary:
    """Per-run training curves, shape ``(n_runs, epochs + 1)``."""

    model: str
    config: SpikeTimingConfig
    mse: np.ndarray
    rate_hz: np.ndarray

    @property
    def mse_mean(self) -> np.ndarray:
        return self.mse.mean(axis=0)

    @property
    def mse_std(self) -> np.ndarray:
        return self.mse.std(axis=0)

    @property
    def rate_mean(self) -> np.ndarray:
        return self.rate_hz.mean(axis=0)

    @property
    def rate_std(self) -> np.ndarray:
        return self.rate_hz.std(axis=0)

    def final(self, window: int = 50) -> tuple[np.ndarray, np.ndarray]:
        """Per-run mean MSE and firing rate over the last ``window`` epochs."""
        w = min(window, self.mse.shape[1])
        return self.mse[:, -w:].mean(axis=1), self.rate_hz[:, -w:].mean(axis=1)


def run_streams(seed: int, run: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (initialization, data) generators for one run.

    They depend only on ``(seed, run)``, so different models share
    initial weights and training data.
    """
    init, data = np.random.SeedSequence([seed, run]).spawn(2)
    return np.random.default_rng(init), np.random.default_rng(data)


def _train_one(args) -> TrainingCurve:
    cfg, run = args
    init_rng, data_rng = run_streams(cfg.seed, run)
    params = nm.LifParams(alpha=cfg.alpha, v_thr=cfg.v_thr, dt_ref=cfg.dt_ref, gamma=cfg.gamma)
    net = Network.random(cfg.model, 1, cfg.n_hidden, 1, init_rng, params=params, kappa=cfg.kappa)
    task = SpikeTimingTask(T=cfg.T, rate_hz=cfg.rate_hz)
    _, curve = train(net, task, cfg.epochs, cfg.batch, Exact(), data_rng,
                     lr0=cfg.lr0, decay=cfg.decay, decay_every=cfg.decay_every)
    return curve


def run_spike_timing(cfg: SpikeTimingConfig, model: str | None = None) -> SpikeTimingSummary:
    """Train ``cfg.n_runs`` networks; ``model`` overrides ``cfg.model``."""
    if model is not None:
        cfg = dataclasses.replace(cfg, model=model)
    model = cfg.model
    jobs = [(cfg, r) for r in range(cfg.n_runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            curves = list(ex.map(_train_one, jobs))
    else:
        curves = [_train_one(j) for j in jobs]
    return SpikeTimingSummary(model, cfg, np.stack([c.mse for c in curves]), np.stack([c.rate_hz for c in curves]))

