import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from pendcopter.errors import DegenerateConfiguration, DegenerateEquilibrium
from pendcopter.lowlevel import (AttitudeMeasurement, GimbalController, GimbalCtlState,
                                 GimbalGains, GimbalReference, PidGains, cascade_step,
                                 equivalent_inertia_spl, gimbal_inertia, torque_pfl, torque_sfl,
                                 torque_spl)
from pendcopter.plant import PlantParams, gimbal_accel

P = PlantParams()
betas = st.floats(-math.pi / 4 + 0.01, 3 * math.pi / 4 - 0.01)
rates = st.floats(-20, 20)
accs = st.floats(-500, 500)


def test_pid_gains_validation():
    with pytest.raises(ValueError):
        PidGains(-1.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        PidGains(10.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        PidGains(1.0, 5.0, 1.0, rate_limit=0.0)


def test_cascade_zero_error_zero_output():
    st_ = GimbalCtlState()
    out = cascade_step(GimbalReference(0.3, 0.2), AttitudeMeasurement(0.3, 0.2, 0.0, 0.0),
                       GimbalGains(), st_, 0.002)
    assert out == (0.0, 0.0)


def test_cascade_position_loop_is_proportional():
    g = PidGains(5.0, 20.0, 0.0)
    st_ = GimbalCtlState()
    cascade_step(GimbalReference(0.1, 0.0), AttitudeMeasurement(0.0, 0.0, 0.0, 0.0),
                 GimbalGains(g, g), st_, 0.002)
    assert st_.rate_cmd[0] == pytest.approx(0.5)


def test_cascade_integrator_arithmetic():
    g = PidGains(0.0, 1.0, 2.0)
    st_ = GimbalCtlState()
    e = 0.3
    for _ in range(500):
        cascade_step(GimbalReference(0.0, 0.0, e, 0.0), AttitudeMeasurement(0.0, 0.0, 0.0, 0.0),
                     GimbalGains(g, g), st_, 0.002)
    assert g.ki_vel * st_.integ[0] == pytest.approx(2.0 * e, rel=1e-12)


def test_cascade_rate_limit():
    g = PidGains(10.0, 20.0, 0.0, rate_limit=1.0)
    st_ = GimbalCtlState()
    cascade_step(GimbalReference(1.0, 0.0, 0.5, 0.0), AttitudeMeasurement(0.0, 0.0, 0.0, 0.0),
                 GimbalGains(g, g), st_, 0.002)
    assert st_.rate_cmd[0] == pytest.approx(1.5)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-50, 50)), min_size=1, max_size=300),
       st.floats(0.1, 50.0))
def test_velocity_integrator_bound_never_exceeded(seq, limit):
    gains = GimbalGains()
    st_ = GimbalCtlState()
    for e, r in seq:
        cascade_step(GimbalReference(e, -e), AttitudeMeasurement(0.0, 0.0, r, -r), gains, st_,
                     0.002, integral_limit=limit)
        assert abs(gains.alpha.ki_vel * st_.integ[0]) <= limit * (1 + 1e-12)
        assert abs(gains.beta.ki_vel * st_.integ[1]) <= limit * (1 + 1e-12)


def test_equivalent_inertia_examples():
    assert equivalent_inertia_spl(0.0, P) == (pytest.approx(1.66e-5), P.J_cy)
    ja, jb = equivalent_inertia_spl(math.pi / 4, P)
    assert ja == pytest.approx(2.295e-5, rel=1e-12)
    for b in (0.3, 1.0, 2.0):
        assert equivalent_inertia_spl(b, P)[1] == P.J_cy
    with pytest.raises(DegenerateEquilibrium):
        equivalent_inertia_spl(-math.pi / 4, P)


def test_sfl_zero_rates_pure_inertia():
    t = torque_sfl((10.0, -5.0), 0.4, 0.0, 0.0, P)
    assert t == (gimbal_inertia(0.4, P) * 10.0, P.J_cy * -5.0)
    assert torque_sfl((1.0, 0.0), 0.0, 0.0, 0.0, P)[0] == P.J_cx


@settings(max_examples=200)
@given(betas, rates, rates, accs, accs)
def test_sfl_inverts_gimbal_dynamics(beta, ad, bd, aa, ba):
    tau = torque_sfl((aa, ba), beta, ad, bd, P)
    got = gimbal_accel(beta, ad, bd, tau[0], tau[1], P)
    np.testing.assert_allclose(got, (aa, ba), rtol=0, atol=1e-10 * (1 + abs(aa) + abs(ba)))


def test_sfl_degenerate_configuration():
    with pytest.raises(DegenerateConfiguration):
        torque_sfl((0.0, 0.0), -math.pi / 4, 0.0, 0.0, P)
    with pytest.raises(DegenerateConfiguration):
        torque_pfl((0.0, 0.0), 3 * math.pi / 4, 0.0, 0.0, P)


@given(betas, rates, rates, accs, accs)
def test_pfl_equals_sfl_when_rates_match(beta, ad, bd, aa, ba):
    assert torque_pfl((aa, ba), beta, ad, bd, P) == torque_sfl((aa, ba), beta, ad, bd, P)


def test_pfl_zero_commanded_rates():
    assert torque_pfl((3.0, 4.0), 0.7, 0.0, 0.0, P) == (gimbal_inertia(0.7, P) * 3.0,
                                                        P.J_cy * 4.0)


def test_pfl_torque_noise_below_sfl():
    rng = np.random.default_rng(8)
    beta, acc = 0.6, (20.0, -10.0)
    noisy = rng.normal(0.0, 2.0, size=(10_000, 2))
    sfl = np.array([torque_sfl(acc, beta, a, b, P) for a, b in noisy])
    pfl = np.array([torque_pfl(acc, beta, 0.0, 0.0, P) for _ in noisy])
    assert np.all(pfl.std(axis=0) < sfl.std(axis=0))


def test_spl_examples():
    assert torque_spl((0.0, 1.0), 0.0, P)[1] == P.J_cy
    for beta_eq in (0.0, math.pi / 4):
        assert torque_spl((7.0, 3.0), beta_eq, P) == pytest.approx(
            torque_sfl((7.0, 3.0), beta_eq, 0.0, 0.0, P), rel=1e-12)


def test_spl_inertia_mismatch_via_plant_inversion():
    beta_eq, beta = 0.0, 0.9
    tau = torque_spl((1.0, 0.0), beta_eq, P)
    got, _ = gimbal_accel(beta, 0.0, 0.0, tau[0], tau[1], P)
    # achieved / desired = J(beta_eq) / J(beta)
    assert got == pytest.approx(equivalent_inertia_spl(beta_eq, P)[0] / gimbal_inertia(beta, P))


def test_torques_finite_on_supported_range():
    for b in np.linspace(-math.pi / 4 + 1e-3, 3 * math.pi / 4 - 1e-3, 500):
        assert all(math.isfinite(v) for v in torque_sfl((5.0, 5.0), b, 3.0, -2.0, P))


def test_controller_methods_and_degenerate_spl():
    with pytest.raises(ValueError):
        GimbalController("XYZ", P, 0.002)
    with pytest.raises(DegenerateEquilibrium):
        GimbalController("SPL", P, 0.002, beta_eq=-math.pi / 4)
    c = GimbalController("pfl", P, 0.002)
    assert c.method == "PFL"


def _pid_loop(plant_accel, t_end=4.0):
    """Continuous P-position / PI-velocity cascade on a gimbal model."""
    g = GimbalGains()

    def ref(t):
        # smooth alpha and beta references
        return (0.6 * math.sin(1.5 * t), 0.9 * math.cos(1.5 * t),
                0.4 * (1 - math.cos(2.0 * t)), 0.8 * math.sin(2.0 * t))

    def rhs(t, z):
        a, b, ad, bd, ia, ib = z
        ra, rad, rb, rbd = ref(t)
        ea = g.alpha.kp_pos * (ra - a) + rad - ad
        eb = g.beta.kp_pos * (rb - b) + rbd - bd
        acc = (g.alpha.kp_vel * ea + g.alpha.ki_vel * ia, g.beta.kp_vel * eb + g.beta.ki_vel * ib)
        aa, ba = plant_accel(b, ad, bd, acc)
        return [ad, bd, aa, ba, ea, eb]

    return solve_ivp(rhs, (0, t_end), [0, 0, 0, 0, 0, 0], rtol=1e-11, atol=1e-12,
                     dense_output=True, max_step=0.005)


def test_sfl_closed_loop_matches_double_integrator():
    def nonlinear(b, ad, bd, acc):
        tau = torque_sfl(acc, b, ad, bd, P)
        return gimbal_accel(b, ad, bd, tau[0], tau[1], P)

    def linear(b, ad, bd, acc):
        return acc

    ts = np.linspace(0, 4, 801)
    a = _pid_loop(nonlinear).sol(ts)
    b = _pid_loop(linear).sol(ts)
    assert np.max(np.abs(a[:2] - b[:2])) < 1e-6


def test_integral_limit_clamps_controller_state():
    c = GimbalController("SFL", P, 0.002, integral_limit=1.0)
    for _ in range(1000):
        c(GimbalReference(1.0, 1.0), AttitudeMeasurement(0.0, 0.0, 0.0, 0.0))
    assert abs(c.gains.alpha.ki_vel * c.state.integ[0]) == pytest.approx(1.0)
