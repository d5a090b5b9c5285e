"""Reference gradients: unrolled backpropagation through time and finite differences.

The oracle replays an episode with the single-neuron functions of
:mod:`eprop_stdp.neurons`, checks that the replay reproduces the recorded
tape, and then runs a reverse sweep over every node of the unrolled graph.
It shares no code with the batched kernels.  The spike nonlinearity is
differentiated with the model's pseudo-derivative and every reset term is
differentiated exactly, with the spike treated as an independent input to
the state update.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import neurons as nm
from .engine import EpisodeRecording, Exact, Gradients, Network, eprop_gradients, run_episode
from .errors import ContractViolation, SpikeFlipDetected


@dataclass
class UnrolledTape:
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    z: np.ndarray
    h: np.ndarray
    y: np.ndarray

    @classmethod
    def from_episode(cls, rec: EpisodeRecording) -> "UnrolledTape":
        if not rec.recorded:
            raise ContractViolation("tape needs an episode recorded with states")
        return cls(rec.x, rec.v, rec.u, rec.z, rec.h, rec.y)

    @property
    def T(self) -> int:
        return self.z.shape[0]


def replay(net: Network, x: np.ndarray) -> UnrolledTape:
    """Run the episode neuron by neuron with the reference step functions."""
    model, p = net.model, net.params
    T, n = x.shape[0], net.n_hidden
    states = [nm.initial_state(model, p) for _ in range(n)]
    v = np.zeros((T + 1, n))
    u = np.zeros((T + 1, n))
    z = np.zeros((T, n))
    h = np.zeros((T, n))
    y = np.zeros((T, net.n_out))
    y_prev = np.zeros(net.n_out)
    for j, s in enumerate(states):
        v[0, j] = s.v
        u[0, j] = getattr(s, "u", 0.0)
    for t in range(T):
        for j, s in enumerate(states):
            z[t, j] = nm.spike(model, s, p)
            h[t, j] = nm.pseudo_derivative(model, s, p)
        y_prev = net.kappa * y_prev + z[t] @ net.w_out
        y[t] = y_prev
        for j in range(n):
            current = float(x[t] @ net.w_in[:, j] + z[t] @ net.w_rec[:, j])
            states[j] = nm.step(model, states[j], int(z[t, j]), current, p)
            v[t + 1, j] = states[j].v
            u[t + 1, j] = getattr(states[j], "u", 0.0)
    return UnrolledTape(x, v, u, z, h, y)


def _check_replay(tape: UnrolledTape, ref: UnrolledTape) -> None:
    if tape.z.shape != ref.z.shape or not np.array_equal(tape.z, ref.z):
        raise ContractViolation("tape spikes are not reproduced by replay")
    scale = 1.0 + np.abs(ref.v)
    if np.max(np.abs(tape.v - ref.v) / scale) > 1e-9 or np.max(np.abs(tape.y - ref.y)) > 1e-9 * (1 + np.abs(ref.y).max()):
        raise ContractViolation("tape states are not reproduced by replay")


def _local_partials(model: str, p, v: float, u: float, z: float, z_ref: float):
    """Partials of (v', u') w.r.t. v, u, z, z_ref and the input current."""
    if model == nm.LIF:
        return dict(vv=p.alpha, vu=0.0, uv=0.0, uu=0.0, vz=-p.v_thr, uz=0.0, vzr=0.0, vI=1.0)
    if model == nm.STDP_LIF:
        c = 1.0 - z - z_ref
        active = c >= 0.0
        dz = -p.alpha * v if active else 0.0
        return dict(vv=p.alpha * max(c, 0.0), vu=0.0, uv=0.0, uu=0.0, vz=dz, uz=0.0, vzr=dz, vI=1.0)
    # Izhikevich: (v, u, z) -> (v_tilde, u_tilde) -> (v', u')
    dt = p.dt
    vt = v - (v - p.v_reset) * z
    dvt_dv, dvt_dz = 1.0 - z, -(v - p.v_reset)
    dut_du, dut_dz = 1.0, p.u_jump
    dvn_dvt = 1.0 + dt * (0.08 * vt + 5.0)
    dvn_dut = -dt
    dun_dvt = 0.004 * dt
    dun_dut = 1.0 - 0.02 * dt
    return dict(
        vv=dvn_dvt * dvt_dv, vu=dvn_dut * dut_du,
        uv=dun_dvt * dvt_dv, uu=dun_dut * dut_du,
        vz=dvn_dvt * dvt_dz + dvn_dut * dut_dz,
        uz=dun_dvt * dvt_dz + dun_dut * dut_dz,
        vzr=0.0, vI=dt,
    )


def bptt_gradient(net: Network, tape: UnrolledTape, targets) -> Gradients:
    """dE/dw for E = 0.5 * sum_t |y[t] - target[t]|^2 by a full reverse sweep."""
    T, n = tape.z.shape
    tgt = np.asarray(targets, dtype=np.float64)
    if tgt.ndim == 1:
        tgt = tgt[:, None]
    if tgt.shape != (T, net.n_out) or tape.x.shape != (T, net.n_in) or tape.v.shape != (T + 1, n):
        raise ContractViolation("tape, targets and network shapes disagree")
    ref = replay(net, tape.x)
    _check_replay(tape, ref)
    model, p = net.model, net.params
    k = p.dt_ref if model == nm.STDP_LIF else None

    g_in = np.zeros_like(net.w_in)
    g_rec = np.zeros_like(net.w_rec)
    g_out = np.zeros_like(net.w_out)
    a_v = np.zeros((T + 1, n))
    a_u = np.zeros((T + 1, n))
    a_z = np.zeros((T, n))
    a_y_next = np.zeros(net.n_out)
    for t in range(T - 1, -1, -1):
        # state update t -> t+1
        a_I = np.zeros(n)
        for j in range(n):
            z_ref = 0.0
            if k is not None:
                z_ref = ref.z[t - k, j] if t >= k else 0.0
            d = _local_partials(model, p, ref.v[t, j], ref.u[t, j], ref.z[t, j], z_ref)
            av, au = a_v[t + 1, j], a_u[t + 1, j]
            a_v[t, j] += av * d["vv"] + au * d["uv"]
            a_u[t, j] += av * d["vu"] + au * d["uu"]
            a_z[t, j] += av * d["vz"] + au * d["uz"]
            if k is not None and t >= k:
                # delayed reset: push credit back to the spike emitted k steps earlier
                a_z[t - k, j] += av * d["vzr"]
            a_I[j] = av * d["vI"]
        g_in += np.outer(ref.x[t], a_I)
        g_rec += np.outer(ref.z[t], a_I)
        a_z[t] += net.w_rec @ a_I
        # readout
        a_y = (ref.y[t] - tgt[t]) + net.kappa * a_y_next
        g_out += np.outer(ref.z[t], a_y)
        a_z[t] += net.w_out @ a_y
        a_y_next = a_y
        # spike nonlinearity
        a_v[t] += a_z[t] * ref.h[t]
    np.fill_diagonal(g_rec, 0.0)
    return Gradients(g_in, g_rec, g_out)


def loss(net: Network, input_spikes, targets) -> float:
    rec = run_episode(net, input_spikes, record=False)
    tgt = np.asarray(targets, dtype=np.float64).reshape(rec.y.shape)
    return 0.5 * float(np.sum((rec.y - tgt) ** 2))


def finite_difference_gradient(net: Network, input_spikes, targets, weight: tuple[str, int, int],
                               delta: float = 1e-6, strict: bool = False) -> float:
    """Central difference ``(E(w + delta) - E(w - delta)) / (2 delta)`` for one weight.

    ``weight`` is ``(name, i, j)`` with name in ``w_in``, ``w_rec``, ``w_out``.
    A ``SpikeFlipDetected`` warning is issued (or raised with ``strict``) when
    the perturbation changes any spike.
    """
    if delta == 0.0 or not np.isfinite(delta):
        raise ContractViolation("delta must be finite and non-zero")
    name, i, j = weight
    if name == "w_rec" and i == j:
        raise ContractViolation("self-connections are not parameters")
    base = run_episode(net, input_spikes, record=False).z
    values, flipped = [], False
    for sign in (1.0, -1.0):
        w = net.weights()[name].copy()
        w[i, j] += sign * delta
        shifted = net.with_weights({name: w})
        values.append(loss(shifted, input_spikes, targets))
        flipped |= not np.array_equal(run_episode(shifted, input_spikes, record=False).z, base)
    if flipped:
        msg = f"perturbing {name}[{i},{j}] by {delta:g} changed the spike train"
        if strict:
            raise SpikeFlipDetected(msg)
        warnings.warn(msg, SpikeFlipDetected, stacklevel=2)
    return (values[0] - values[1]) / (2.0 * delta)


def max_relative_error(grads: Gradients, reference: Gradients, floor: float = 1e-12) -> float:
    """Largest ``|g - ref| / |ref|`` over entries with ``|ref| > floor``."""
    worst = 0.0
    for name, ref in reference.as_dict().items():
        g = grads.as_dict()[name]
        mask = np.abs(ref) > floor
        if mask.any():
            worst = max(worst, float(np.max(np.abs(g[mask] - ref[mask]) / np.abs(ref[mask]))))
    return worst


def gradient_check(model: str, n_hidden: int, T: int, seed: int = 0, n_in: int = 2, n_out: int = 1,
                   input_rate: float = 0.2) -> tuple[float, float]:
    """Exact-mode e-prop against the oracle on a random net and episode.

    Returns ``(max relative error, hidden spike count)``.
    """
    rng = np.random.default_rng(seed)
    net = Network.random(model, n_in, n_hidden, n_out, rng)
    x = (rng.random((T, n_in)) < input_rate).astype(np.float64)
    targets = rng.normal(size=(T, n_out))
    rec = run_episode(net, x)
    ours = eprop_gradients(rec, targets, Exact())
    ref = bptt_gradient(net, UnrolledTape.from_episode(rec), targets)
    return max_relative_error(ours, ref), float(rec.z.sum())
