import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eprop_stdp import neurons as nm
from eprop_stdp.errors import ContractViolation, NumericalDivergence
from eprop_stdp.neurons import IzhParams, IzhState, LifParams, LifState

P = LifParams(alpha=0.9, v_thr=0.5, dt_ref=3, gamma=0.3)
IZ = IzhParams(dt=1.0, gamma=0.3)


def lif(v, age=3, history=(0, 0, 0, 0)):
    return LifState(v, age, history)


# spike rule

def test_lif_spike_above_threshold():
    assert nm.lif_spike(lif(0.6), P) == 1


def test_lif_spike_refractory_suppression():
    assert nm.lif_spike(lif(0.6, age=1), P) == 0


@pytest.mark.parametrize("age", [0, 1, 2, 3])
def test_lif_spike_below_threshold(age):
    assert nm.lif_spike(lif(0.4, age=age), P) == 0


def test_lif_spike_at_threshold_fires():
    assert nm.lif_spike(lif(0.5), P) == 1


# LIF update

def test_lif_step_integration():
    assert nm.lif_step(lif(0.4), 0, 0.2, P).v == pytest.approx(0.56)


def test_lif_step_soft_reset():
    assert nm.lif_step(lif(0.6), 1, 0.0, P).v == pytest.approx(0.04)


def test_lif_step_zero_fixed_point():
    assert nm.lif_step(lif(0.0), 0, 0.0, P).v == 0.0


def test_lif_step_advances_bookkeeping():
    s = nm.lif_step(lif(0.6), 1, 0.0, P)
    assert s.last_spike_age == 0 and s.spike_history == (0, 0, 0, 1)
    s = nm.lif_step(s, 0, 0.0, P)
    assert s.last_spike_age == 1 and s.spike_history == (0, 0, 1, 0)


def test_lif_step_divergence():
    with pytest.raises(NumericalDivergence):
        nm.lif_step(lif(0.0), 0, math.inf, P)


# STDP-LIF update

def test_stdp_lif_hard_reset():
    assert nm.stdp_lif_step(lif(0.8), 1, 0.1, P).v == pytest.approx(0.1)


def test_stdp_lif_reset_at_refractory_end():
    # the spike three steps ago is the oldest history entry once the current output is appended
    s = lif(0.3, age=2, history=(0, 1, 0, 0))
    assert nm.stdp_lif_z_ref(s, 0) == 1
    assert nm.stdp_lif_step(s, 0, 0.05, P).v == pytest.approx(0.05)


def test_stdp_lif_plain_leak():
    assert nm.stdp_lif_step(lif(0.3), 0, 0.05, P).v == pytest.approx(0.32)


def test_stdp_lif_double_reset_is_clamped():
    assert nm.stdp_reset_factor(1, 1) == 0.0
    assert nm.stdp_reset_factor(1, 0) == 0.0
    assert nm.stdp_reset_factor(0, 0) == 1.0


def test_stdp_lif_zero_refractory_uses_current_spike():
    p0 = LifParams(dt_ref=0)
    s = LifState.initial(p0, v=0.7)
    assert nm.stdp_lif_z_ref(s, 1) == 1
    assert nm.stdp_lif_step(s, 1, 0.2, p0).v == pytest.approx(0.2)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-2, 2))
def test_stdp_lif_hard_reset_forgets_v(v1, v2, current):
    a = nm.stdp_lif_step(lif(v1), 1, current, P).v
    b = nm.stdp_lif_step(lif(v2), 1, current, P).v
    assert a == b == pytest.approx(current)


# Izhikevich

@pytest.mark.parametrize("dt", [0.1, 0.5, 1.0])
def test_izh_rest_is_fixed_point(dt):
    s = nm.izh_step(IzhState(-70.0, -14.0), 0, 0.0, IzhParams(dt=dt))
    assert s == IzhState(-70.0, -14.0)


def test_izh_reset():
    p = IzhParams()
    s = IzhState(31.0, 3.0)
    z = nm.izh_spike(s, p)
    assert z == 1
    # with dt tiny, the update is dominated by the reset values
    out = nm.izh_step(s, z, 0.0, IzhParams(dt=1e-12))
    assert out.v == pytest.approx(-65.0)
    assert out.u == pytest.approx(5.0)


def test_izh_euler_arithmetic():
    s = nm.izh_step(IzhState(-65.0, 0.0), 0, 0.0, IZ)
    assert s.v == pytest.approx(-81.0)
    assert s.u == pytest.approx(-0.26)


@pytest.mark.parametrize("v,z", [(30.0, 1), (29.9, 0), (50.0, 1)])
def test_izh_spike(v, z):
    assert nm.izh_spike(IzhState(v, 0.0)) == z


def test_izh_divergence():
    with pytest.raises(NumericalDivergence):
        nm.izh_step(IzhState(1e200, 0.0), 0, 0.0, IZ)


# pseudo-derivatives

def test_lif_pd_peak():
    assert nm.lif_pseudo_derivative(lif(0.5), P) == pytest.approx(0.3)


def test_lif_pd_edge_of_support():
    assert nm.lif_pseudo_derivative(lif(0.0), P) == 0.0


def test_lif_pd_zero_when_refractory():
    assert nm.lif_pseudo_derivative(lif(0.5, age=0), P) == 0.0


def test_stdp_pd_negative_when_refractory():
    assert nm.stdp_lif_pseudo_derivative(lif(0.2, age=1), P) == pytest.approx(-0.3)


def test_stdp_pd_peak_and_support():
    assert nm.stdp_lif_pseudo_derivative(lif(0.5), P) == pytest.approx(0.3)
    assert nm.stdp_lif_pseudo_derivative(lif(1.0), P) == 0.0


@pytest.mark.parametrize("v,h", [(30.0, 0.3), (0.0, 0.3 * math.exp(-1.0)), (60.0, 0.3)])
def test_izh_pd(v, h):
    assert nm.izh_pseudo_derivative(IzhState(v, 0.0), IZ) == pytest.approx(h, rel=1e-12)


@given(st.floats(-10, 10), st.integers(0, 3))
def test_lif_family_pd_bounds(v, age):
    s = lif(v, age=age)
    h_lif = nm.lif_pseudo_derivative(s, P)
    h_stdp = nm.stdp_lif_pseudo_derivative(s, P)
    assert 0.0 <= h_lif <= P.gamma
    assert abs(h_stdp) <= P.gamma
    assert (h_stdp < 0) == (age < P.dt_ref)


@given(st.floats(-200, 200))
def test_izh_pd_bounds(v):
    h = nm.izh_pseudo_derivative(IzhState(v, 0.0), IZ)
    assert 0.0 < h <= IZ.gamma


# refractory contract

@given(st.integers(0, 6), st.lists(st.floats(0.0, 3.0), min_size=12, max_size=12))
def test_refractory_contract(dt_ref, currents):
    p = LifParams(dt_ref=dt_ref)
    for step in (nm.lif_step, nm.stdp_lif_step):
        s = LifState.initial(p, v=1.0)
        outputs = []
        for c in currents:
            z = nm.lif_spike(s, p)
            outputs.append(z)
            s = step(s, z, c, p)
        for t, z in enumerate(outputs):
            if z:
                assert not any(outputs[t + 1:t + 1 + dt_ref])


def test_initial_state_is_not_refractory():
    s = LifState.initial(P)
    assert not s.refractory(P)
    assert len(s.spike_history) == P.dt_ref + 1


@pytest.mark.parametrize("kwargs", [dict(alpha=1.0), dict(alpha=0.0), dict(v_thr=0.0), dict(dt_ref=-1),
                                    dict(dt_ref=1.5), dict(gamma=0.0)])
def test_lif_params_validated(kwargs):
    with pytest.raises(ContractViolation):
        LifParams(**kwargs)


def test_unknown_model():
    with pytest.raises(ContractViolation):
        nm.check_model("alif")
