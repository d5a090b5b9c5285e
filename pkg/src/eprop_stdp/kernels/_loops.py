"""Explicit-loop episode kernels, compiled with numba when available.

Parameter vector layout (see ``pack_params``):
    0 alpha, 1 v_thr, 2 dt_ref, 3 gamma, 4 dt, 5 v_spike, 6 v_reset, 7 u_jump
Model codes: 0 LIF, 1 STDP-LIF, 2 Izhikevich.
"""
import math

import numpy as np

from .._accel import njit


@njit(cache=True)
def simulate(model, prm, x, w_in, w_rec, v0, u0):
    alpha = prm[0]
    v_thr = prm[1]
    dt_ref = int(prm[2])
    gamma = prm[3]
    dt = prm[4]
    v_spike = prm[5]
    v_reset = prm[6]
    u_jump = prm[7]
    T, n_in = x.shape
    n = w_rec.shape[0]
    v = np.zeros((T + 1, n))
    u = np.zeros((T + 1, n))
    z = np.zeros((T, n))
    h = np.zeros((T, n))
    age = np.full(n, dt_ref)
    for j in range(n):
        v[0, j] = v0[j]
        u[0, j] = u0[j]
    ok = True
    for t in range(T):
        for j in range(n):
            vj = v[t, j]
            if model == 2:
                z[t, j] = 1.0 if vj >= v_spike else 0.0
                h[t, j] = gamma * math.exp((min(vj, v_spike) - v_spike) / 30.0)
            elif age[j] < dt_ref:
                z[t, j] = 0.0
                h[t, j] = -gamma if model == 1 else 0.0
            else:
                z[t, j] = 1.0 if vj >= v_thr else 0.0
                h[t, j] = gamma * max(0.0, 1.0 - abs((vj - v_thr) / v_thr))
        for j in range(n):
            cur = 0.0
            for i in range(n_in):
                cur += x[t, i] * w_in[i, j]
            for i in range(n):
                cur += z[t, i] * w_rec[i, j]
            vj = v[t, j]
            zj = z[t, j]
            if model == 0:
                vn = alpha * vj + cur - zj * v_thr
            elif model == 1:
                zr = z[t - dt_ref, j] if t >= dt_ref else 0.0
                vn = alpha * vj * max(0.0, 1.0 - zj - zr) + cur
            else:
                vt = vj - (vj - v_reset) * zj
                ut = u[t, j] + u_jump * zj
                vn = vt + dt * (vt * vt / 25.0 + 5.0 * vt + 140.0 - ut + cur)
                u[t + 1, j] = ut + dt * (0.004 * vt - 0.02 * ut)
                if not math.isfinite(u[t + 1, j]):
                    ok = False
            if not math.isfinite(vn):
                ok = False
            v[t + 1, j] = vn
            if model != 2:
                age[j] = 0 if zj > 0.0 else min(age[j] + 1, dt_ref)
        if not ok:
            break
    return v, u, z, h, ok


@njit(cache=True)
def readout(z, w_out, kappa):
    T, n = z.shape
    n_out = w_out.shape[1]
    y = np.zeros((T, n_out))
    for t in range(T):
        for k in range(n_out):
            acc = kappa * y[t - 1, k] if t > 0 else 0.0
            for j in range(n):
                acc += z[t, j] * w_out[j, k]
            y[t, k] = acc
    return y


@njit(cache=True)
def learning_signal(model, prm, w_rec, w_out, kappa, v, u, z, h, err, recurrent):
    """Total derivative dE/dz[t, j] for E = 0.5 * sum(err**2), plus dE/dy.

    With ``recurrent`` false only the readout pathway is kept.
    """
    alpha = prm[0]
    v_thr = prm[1]
    dt_ref = int(prm[2])
    dt = prm[4]
    v_reset = prm[6]
    u_jump = prm[7]
    T, n = z.shape
    n_out = w_out.shape[1]
    ybar = np.zeros((T, n_out))
    L = np.zeros((T, n))
    dv = np.zeros((T + 1, n))
    du = np.zeros((T + 1, n))
    c_in = dt if model == 2 else 1.0
    for t in range(T - 1, -1, -1):
        for k in range(n_out):
            ybar[t, k] = err[t, k] + (kappa * ybar[t + 1, k] if t + 1 < T else 0.0)
        for j in range(n):
            acc = 0.0
            for k in range(n_out):
                acc += w_out[j, k] * ybar[t, k]
            if recurrent:
                rec = 0.0
                for m in range(n):
                    rec += w_rec[j, m] * dv[t + 1, m]
                acc += c_in * rec
                zj = z[t, j]
                vj = v[t, j]
                if model == 0:
                    acc -= v_thr * dv[t + 1, j]
                elif model == 1:
                    zr = z[t - dt_ref, j] if t >= dt_ref else 0.0
                    if zj + zr <= 1.0:
                        acc -= alpha * vj * dv[t + 1, j]
                    s = t + dt_ref
                    if s < T and z[s, j] + zj <= 1.0:
                        acc -= alpha * v[s, j] * dv[s + 1, j]
                else:
                    vt = vj - (vj - v_reset) * zj
                    a = 1.0 + dt * (0.08 * vt + 5.0)
                    dvt = -(vj - v_reset)
                    acc += dv[t + 1, j] * (a * dvt - dt * u_jump)
                    acc += du[t + 1, j] * (0.004 * dt * dvt + (1.0 - 0.02 * dt) * u_jump)
            L[t, j] = acc
            if recurrent:
                zj = z[t, j]
                if model == 0:
                    dv[t, j] = acc * h[t, j] + alpha * dv[t + 1, j]
                elif model == 1:
                    zr = z[t - dt_ref, j] if t >= dt_ref else 0.0
                    dv[t, j] = acc * h[t, j] + alpha * max(0.0, 1.0 - zj - zr) * dv[t + 1, j]
                else:
                    keep = 1.0 - zj
                    j_vv = keep * (1.0 + (0.08 * v[t, j] + 5.0) * dt)
                    j_uv = 0.004 * dt * keep
                    dv[t, j] = acc * h[t, j] + dv[t + 1, j] * j_vv + du[t + 1, j] * j_uv
                    du[t, j] = -dt * dv[t + 1, j] + (1.0 - 0.02 * dt) * du[t + 1, j]
    return L, ybar


@njit(cache=True)
def eligibility(model, prm, pre, v, z, h, L, store):
    """Forward eligibility recursion; returns sum_t L[t, j] * e[t, i, j].

    ``pre`` holds presynaptic activity per step (inputs then hidden spikes).
    With ``store`` the traces and eligibility vectors are also returned.
    """
    alpha = prm[0]
    dt_ref = int(prm[2])
    dt = prm[4]
    T, n_pre = pre.shape
    n = z.shape[1]
    g = np.zeros((n_pre, n))
    ev = np.zeros((n_pre, n))
    eu = np.zeros((n_pre, n))
    Ts = T if store else 0
    e_rec = np.zeros((Ts, n_pre, n))
    ev_rec = np.zeros((Ts, n_pre, n))
    eu_rec = np.zeros((Ts, n_pre, n))
    c_in = dt if model == 2 else 1.0
    for t in range(T):
        for j in range(n):
            hj = h[t, j]
            Lj = L[t, j]
            zj = z[t, j]
            if model == 0:
                j_vv = alpha
            elif model == 1:
                zr = z[t - dt_ref, j] if t >= dt_ref else 0.0
                j_vv = alpha * max(0.0, 1.0 - zj - zr)
            else:
                j_vv = (1.0 - zj) * (1.0 + (0.08 * v[t, j] + 5.0) * dt)
            j_uv = 0.004 * dt * (1.0 - zj)
            for i in range(n_pre):
                e = hj * ev[i, j]
                g[i, j] += Lj * e
                if store:
                    e_rec[t, i, j] = e
                    ev_rec[t, i, j] = ev[i, j]
                    eu_rec[t, i, j] = eu[i, j]
                if model == 2:
                    ev_new = j_vv * ev[i, j] - dt * eu[i, j] + c_in * pre[t, i]
                    eu[i, j] = j_uv * ev[i, j] + (1.0 - 0.02 * dt) * eu[i, j]
                    ev[i, j] = ev_new
                else:
                    ev[i, j] = j_vv * ev[i, j] + pre[t, i]
    return g, e_rec, ev_rec, eu_rec


@njit(cache=True)
def filtered_spikes_gradient(z, err, kappa):
    """sum_t err[t, k] * zf[t, j] with zf the kappa-filtered hidden spikes."""
    T, n = z.shape
    n_out = err.shape[1]
    g = np.zeros((n, n_out))
    zf = np.zeros(n)
    for t in range(T):
        for j in range(n):
            zf[j] = kappa * zf[j] + z[t, j]
            for k in range(n_out):
                g[j, k] += err[t, k] * zf[j]
    return g
