"""Pure-numpy kernels: a Python loop over time, array operations over neurons.

Same signatures and results as :mod:`._loops`.
"""
import numpy as np


def _unpack(prm):
    return prm[0], prm[1], int(prm[2]), prm[3], prm[4], prm[5], prm[6], prm[7]


def simulate(model, prm, x, w_in, w_rec, v0, u0):
    alpha, v_thr, dt_ref, gamma, dt, v_spike, v_reset, u_jump = _unpack(prm)
    T = x.shape[0]
    n = w_rec.shape[0]
    v = np.zeros((T + 1, n))
    u = np.zeros((T + 1, n))
    z = np.zeros((T, n))
    h = np.zeros((T, n))
    v[0], u[0] = v0, u0
    age = np.full(n, dt_ref)
    drive = x @ w_in
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            vt = v[t]
            if model == 2:
                z[t] = vt >= v_spike
                h[t] = gamma * np.exp((np.minimum(vt, v_spike) - v_spike) / 30.0)
            else:
                refr = age < dt_ref
                z[t] = (vt >= v_thr) & ~refr
                tri = gamma * np.maximum(0.0, 1.0 - np.abs((vt - v_thr) / v_thr))
                h[t] = np.where(refr, -gamma if model == 1 else 0.0, tri)
            cur = drive[t] + z[t] @ w_rec
            if model == 0:
                v[t + 1] = alpha * vt + cur - z[t] * v_thr
            elif model == 1:
                zr = z[t - dt_ref] if t >= dt_ref else 0.0
                v[t + 1] = alpha * vt * np.maximum(0.0, 1.0 - z[t] - zr) + cur
            else:
                vr = vt - (vt - v_reset) * z[t]
                ur = u[t] + u_jump * z[t]
                v[t + 1] = vr + dt * (vr * vr / 25.0 + 5.0 * vr + 140.0 - ur + cur)
                u[t + 1] = ur + dt * (0.004 * vr - 0.02 * ur)
            if not (np.isfinite(v[t + 1]).all() and np.isfinite(u[t + 1]).all()):
                return v, u, z, h, False
            if model != 2:
                age = np.where(z[t] > 0, 0, np.minimum(age + 1, dt_ref))
    return v, u, z, h, True


def readout(z, w_out, kappa):
    drive = z @ w_out
    y = np.zeros_like(drive)
    acc = np.zeros(drive.shape[1])
    for t in range(drive.shape[0]):
        acc = kappa * acc + drive[t]
        y[t] = acc
    return y


def learning_signal(model, prm, w_rec, w_out, kappa, v, u, z, h, err, recurrent):
    alpha, v_thr, dt_ref, _, dt, _, v_reset, u_jump = _unpack(prm)
    T, n = z.shape
    ybar = np.zeros_like(err)
    acc = np.zeros(err.shape[1])
    for t in range(T - 1, -1, -1):
        acc = err[t] + kappa * acc
        ybar[t] = acc
    L = ybar @ w_out.T
    if not recurrent:
        return L, ybar
    c_in = dt if model == 2 else 1.0
    dv = np.zeros((T + 1, n))
    du = np.zeros((T + 1, n))
    for t in range(T - 1, -1, -1):
        zt, vt = z[t], v[t]
        Lt = L[t] + c_in * (w_rec @ dv[t + 1])
        if model == 0:
            Lt = Lt - v_thr * dv[t + 1]
            dv[t] = Lt * h[t] + alpha * dv[t + 1]
        elif model == 1:
            zr = z[t - dt_ref] if t >= dt_ref else np.zeros(n)
            unclamped = (zt + zr) <= 1.0
            Lt = Lt - np.where(unclamped, alpha * vt * dv[t + 1], 0.0)
            s = t + dt_ref
            if s < T:
                later = (z[s] + zt) <= 1.0
                Lt = Lt - np.where(later, alpha * v[s] * dv[s + 1], 0.0)
            dv[t] = Lt * h[t] + alpha * np.maximum(0.0, 1.0 - zt - zr) * dv[t + 1]
        else:
            vr = vt - (vt - v_reset) * zt
            a = 1.0 + dt * (0.08 * vr + 5.0)
            dvr = -(vt - v_reset)
            Lt = Lt + dv[t + 1] * (a * dvr - dt * u_jump)
            Lt = Lt + du[t + 1] * (0.004 * dt * dvr + (1.0 - 0.02 * dt) * u_jump)
            keep = 1.0 - zt
            dv[t] = Lt * h[t] + dv[t + 1] * keep * (1.0 + (0.08 * vt + 5.0) * dt) + du[t + 1] * 0.004 * dt * keep
            du[t] = -dt * dv[t + 1] + (1.0 - 0.02 * dt) * du[t + 1]
        L[t] = Lt
    return L, ybar


def eligibility(model, prm, pre, v, z, h, L, store):
    alpha, _, dt_ref, _, dt, _, _, _ = _unpack(prm)
    T, n_pre = pre.shape
    n = z.shape[1]
    g = np.zeros((n_pre, n))
    ev = np.zeros((n_pre, n))
    eu = np.zeros((n_pre, n))
    Ts = T if store else 0
    e_rec = np.zeros((Ts, n_pre, n))
    ev_rec = np.zeros((Ts, n_pre, n))
    eu_rec = np.zeros((Ts, n_pre, n))
    for t in range(T):
        e = h[t] * ev
        g += L[t] * e
        if store:
            e_rec[t], ev_rec[t], eu_rec[t] = e, ev, eu
        zt = z[t]
        if model == 0:
            ev = alpha * ev + pre[t][:, None]
        elif model == 1:
            zr = z[t - dt_ref] if t >= dt_ref else 0.0
            ev = alpha * np.maximum(0.0, 1.0 - zt - zr) * ev + pre[t][:, None]
        else:
            keep = 1.0 - zt
            j_vv = keep * (1.0 + (0.08 * v[t] + 5.0) * dt)
            ev, eu = (
                j_vv * ev - dt * eu + dt * pre[t][:, None],
                0.004 * dt * keep * ev + (1.0 - 0.02 * dt) * eu,
            )
    return g, e_rec, ev_rec, eu_rec


def filtered_spikes_gradient(z, err, kappa):
    zf = readout(z, np.eye(z.shape[1]), kappa)
    return zf.T @ err
