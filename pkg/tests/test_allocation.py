import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pendcopter.allocation import (SingularityPolicy, ThrustCommand, allocate_rotors,
                                   fab_from_thrust_vector, fab_level_branch,
                                   gimbal_torque_to_body, thrust_vector_from_fab,
                                   torque_to_thrust_vector)
from pendcopter.errors import FrameMismatch
from pendcopter.kinematics import RotorParams, Vec3, rot_gimbal_to_copter
from pendcopter.plant import PlantParams

P = PlantParams()
POLICY = SingularityPolicy()
ROTOR = RotorParams()
torques = st.floats(-0.2, 0.2, allow_nan=False)


def test_equilibrium_torque_gives_hover_thrust():
    cmd = torque_to_thrust_vector((-0.11670, 0.0), 0.0, P)
    assert cmd.F.z == pytest.approx(0.11670 / 0.337, rel=1e-12)
    assert cmd.f == pytest.approx(0.34629, abs=1e-5)
    cmd = torque_to_thrust_vector((-P.gravity_moment, 0.0), 0.0, P)
    assert cmd.f == pytest.approx(0.34631, abs=1e-5)
    assert cmd.alpha_d == 0.0 and cmd.beta_d == 0.0
    assert cmd.mode == "normal"


def test_zero_torque_zero_thrust():
    cmd = torque_to_thrust_vector((0.0, 0.0), 0.0, P)
    assert (cmd.f, cmd.alpha_d, cmd.beta_d) == (0.0, 0.0, 0.0)
    assert cmd.mode == "normal"


def test_vertical_pendulum_uses_force_balance():
    for T_Y, T_Z in ((0.0, 0.0), (0.0, 0.05), (-0.01, 0.03)):
        cmd = torque_to_thrust_vector((T_Y, T_Z), math.pi / 2, P)
        assert cmd.mode == "singular"
        assert cmd.F.y == 0.0
        if T_Y == 0.0:
            # F_z term vanishes
            assert cmd.F.x == pytest.approx(0.36297, abs=1e-12)


def test_singular_branch_solves_vertical_force_balance():
    for th in (math.pi / 2 - 0.1, math.pi / 2, math.pi / 2 + 0.15):
        for T_Y in (-0.05, 0.0, 0.04):
            cmd = torque_to_thrust_vector((T_Y, 0.0), th, P)
            assert cmd.mode == "singular"
            vertical = cmd.F.x * math.sin(th) + cmd.F.z * math.cos(th)
            assert vertical == pytest.approx((P.m_c + P.m_p) * P.g, abs=1e-12)


def test_fab_examples():
    assert fab_from_thrust_vector(Vec3(0, 0, 1, "G", "N")) == (1.0, 0.0, 0.0)
    f, a, b = fab_from_thrust_vector(Vec3(0, -2, 0, "G", "N"))
    assert (f, b) == (2.0, 0.0) and a == pytest.approx(math.pi / 2)
    assert fab_from_thrust_vector(Vec3(0, 0, 0, "G", "N")) == (0.0, 0.0, 0.0)
    with pytest.raises(FrameMismatch):
        fab_from_thrust_vector(Vec3(0, 0, 1, "C", "N"))


def test_forward_map_is_rotated_body_thrust():
    rng = np.random.default_rng(5)
    for f, a, b in rng.uniform([0.01, -3, -1.5], [1, 3, 1.5], size=(100, 3)):
        F = thrust_vector_from_fab(f, a, b).array()
        np.testing.assert_allclose(F, rot_gimbal_to_copter(a, b) @ [0, 0, f], atol=1e-15)


@settings(max_examples=300)
@given(st.floats(1e-3, 10.0), st.floats(-math.pi + 1e-9, math.pi),
       st.floats(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6))
def test_round_trip_fab(f, a, b):
    f2, a2, b2 = fab_from_thrust_vector(thrust_vector_from_fab(f, a, b))
    assert abs(f2 - f) <= 1e-12 * max(1.0, f)
    assert abs(math.remainder(a2 - a, 2 * math.pi)) < 1e-12 or abs(abs(b) - math.pi / 2) < 1e-4
    assert abs(b2 - b) < 1e-12 or abs(abs(b) - math.pi / 2) < 1e-4


def test_level_branch_is_equivalent_attitude():
    rng = np.random.default_rng(9)
    for F in rng.normal(size=(200, 3)):
        v = Vec3.of(F, "G", "N")
        f, a, b = fab_level_branch(v)
        assert abs(a) <= math.pi / 2 + 1e-12
        np.testing.assert_allclose(thrust_vector_from_fab(f, a, b).array(), F, atol=1e-12)


def test_gimbal_torque_to_body_examples():
    assert gimbal_torque_to_body(2.0, 3.0, 0.0) == (2.0, 3.0, 0.0)
    tx, ty, tz = gimbal_torque_to_body(2.0, 3.0, math.pi / 2)
    assert tx == pytest.approx(0.0, abs=1e-15) and (ty, tz) == (3.0, 2.0)


@given(torques, torques, st.floats(-3, 3))
def test_zero_gimbal_z_moment(ta, tb, beta):
    tx, _, tz = gimbal_torque_to_body(ta, tb, beta)
    cb, sb = math.cos(beta), math.sin(beta)
    # exact up to one rounding of each product
    assert abs(tz * cb - tx * sb) <= 4 * np.finfo(float).eps * abs(ta)
    # tau_alpha is recovered as the projection on the gimbal x axis
    assert tx * cb + tz * sb == pytest.approx(ta, abs=1e-15)


@given(st.floats(-0.15, -1e-6), st.floats(-1.2, 1.2))
def test_level_copter_when_azimuth_torque_is_zero(T_Y, theta1):
    # normal mode, F_y = 0: the desired beta equals theta1 in magnitude
    if POLICY.in_band(theta1):
        return
    cmd = torque_to_thrust_vector((T_Y, 0.0), theta1, P)
    assert cmd.mode == "normal"
    assert abs(cmd.beta_d) == pytest.approx(abs(theta1), abs=1e-12)


@pytest.mark.parametrize("T_Y", [-0.12, -0.05, 0.03])
def test_fx_continuous_across_mode_boundaries(T_Y):
    edges = (math.pi / 2 - POLICY.delta, math.pi / 2 - POLICY.delta + POLICY.blend_width,
             math.pi / 2 + POLICY.delta - POLICY.blend_width, math.pi / 2 + POLICY.delta)
    for e in edges:
        grid = e + np.linspace(-1e-6, 1e-6, 41)
        fx = np.array([torque_to_thrust_vector((T_Y, 0.0), th, P).F.x for th in grid])
        assert np.max(np.abs(np.diff(fx))) < 1e-5


@given(torques, torques, torques, st.floats(math.pi / 2 - POLICY.delta + 1e-9,
                                            math.pi / 2 + POLICY.delta - 1e-9))
def test_azimuth_torque_has_no_effect_in_band(T_Y, T_Z1, T_Z2, theta1):
    a = torque_to_thrust_vector((T_Y, T_Z1), theta1, P)
    b = torque_to_thrust_vector((T_Y, T_Z2), theta1, P)
    assert a.F == b.F
    assert a.F.y == 0.0


def test_blend_weight_ramps_linearly():
    d, w = POLICY.delta, POLICY.blend_width
    assert POLICY.weight(math.pi / 2 - d - 1e-3) == 0.0
    assert POLICY.weight(math.pi / 2 - d + w / 2) == pytest.approx(0.5)
    assert POLICY.weight(math.pi / 2) == 1.0
    cmd = torque_to_thrust_vector((-0.05, 0.0), math.pi / 2 - d + w / 2, P)
    assert cmd.mode == "blend" and cmd.weight == pytest.approx(0.5)
    with pytest.raises(ValueError):
        SingularityPolicy(delta=0.1, blend_width=0.2)


def test_thrust_cap_shrinks_fx_first():
    # near the band edge |tan theta1| is large and F_x dominates
    cmd = torque_to_thrust_vector((-0.1, 0.0), 1.2, P, thrust_limit=0.6)
    assert cmd.saturated
    assert cmd.f == pytest.approx(0.6, rel=1e-12)
    assert cmd.F.z == pytest.approx(0.1 / P.L_g)
    # lateral demand alone above the cap: scale it, drop F_x
    cmd = torque_to_thrust_vector((-0.3, 0.0), 0.1, P, thrust_limit=0.6)
    assert cmd.saturated and cmd.F.x == 0.0 and cmd.f == pytest.approx(0.6)


def test_allocate_rotors_examples():
    res = allocate_rotors(P.hover_thrust, (0.0, 0.0, 0.0), ROTOR)
    np.testing.assert_allclose(res.thrusts, [P.hover_thrust / 4] * 4)
    assert res.thrusts[0] == pytest.approx(0.086578, abs=5e-6)
    assert not res.saturated
    res = allocate_rotors(0.6, (0.0, 0.0, 0.0), ROTOR)
    assert res.saturated
    np.testing.assert_array_equal(res.thrusts, [0.1472] * 4)
    res = allocate_rotors(0.0, (0.0, 0.0, 0.0), ROTOR)
    np.testing.assert_array_equal(res.thrusts, [0.0] * 4)
    cmd = ThrustCommand(0.4, 0.0, 0.0, Vec3(0, 0, 0.4, "G", "N"))
    np.testing.assert_allclose(allocate_rotors(cmd, (0, 0, 0), ROTOR).thrusts, [0.1] * 4)
