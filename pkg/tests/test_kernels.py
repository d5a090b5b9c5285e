"""The compiled loop kernels and the numpy kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from eprop_stdp import neurons as nm
from eprop_stdp.engine import Network
from eprop_stdp.kernels import _loops, _vectorized, pack_params


def episode(model, rng, n=5, T=150):
    net = Network.random(model, 2, n, 2, rng)
    x = (rng.random((T, 2)) < 0.2).astype(float)
    return net, x, rng.normal(size=(T, 2))


@pytest.mark.parametrize("model", nm.MODELS)
def test_backends_agree(model, rng):
    for _ in range(3):
        net, x, tgt = episode(model, rng)
        code, prm = pack_params(model, net.params)
        v0, u0 = net.initial_state()
        a = _loops.simulate(code, prm, x, net.w_in, net.w_rec, v0, u0)
        b = _vectorized.simulate(code, prm, x, net.w_in, net.w_rec, v0, u0)
        assert np.array_equal(a[2], b[2])
        for p, q in zip(a[:4], b[:4]):
            assert np.allclose(p, q, rtol=1e-11, atol=1e-11)
        v, u, z, h, _ = a
        y = _loops.readout(z, net.w_out, net.kappa)
        assert np.allclose(y, _vectorized.readout(z, net.w_out, net.kappa))
        err = y - tgt
        for rec in (True, False):
            La, ya = _loops.learning_signal(code, prm, net.w_rec, net.w_out, net.kappa, v, u, z, h, err, rec)
            Lb, yb = _vectorized.learning_signal(code, prm, net.w_rec, net.w_out, net.kappa, v, u, z, h, err, rec)
            assert np.allclose(La, Lb, rtol=1e-10, atol=1e-12) and np.allclose(ya, yb)
        pre = np.concatenate([x, z], axis=1)
        ga = _loops.eligibility(code, prm, pre, v, z, h, La, True)
        gb = _vectorized.eligibility(code, prm, pre, v, z, h, La, True)
        for p, q in zip(ga, gb):
            assert np.allclose(p, q, rtol=1e-10, atol=1e-12)
        assert np.allclose(_loops.filtered_spikes_gradient(z, err, net.kappa),
                           _vectorized.filtered_spikes_gradient(z, err, net.kappa))


def test_pack_params_layout():
    code, prm = pack_params(nm.STDP_LIF, nm.LifParams(alpha=0.8, v_thr=0.4, dt_ref=2, gamma=0.2))
    assert code == 1 and prm[:4].tolist() == [0.8, 0.4, 2.0, 0.2]
    code, prm = pack_params(nm.IZHIKEVICH, nm.IzhParams(dt=0.5))
    assert code == 2 and prm[4] == 0.5 and prm[5:].tolist() == [30.0, -65.0, 2.0]


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, EPROP_STDP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from eprop_stdp import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
