import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pendcopter.errors import FrameMismatch, InfeasibleCommand
from pendcopter.kinematics import (RotorParams, Vec3, copter_angular_velocity, mix_to_rotors,
                                   mixing_matrix, pendulum_angular_velocity, require_frame,
                                   rot_gimbal_to_copter, rot_world_to_pendulum,
                                   wrench_from_thrusts)

angles = st.floats(-20.0, 20.0, allow_nan=False)
rates = st.floats(-50.0, 50.0, allow_nan=False)
ROTOR = RotorParams()


def _elementary(axis, a):
    c, s = math.cos(a), math.sin(a)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def test_gimbal_rotation_identity_at_zero():
    np.testing.assert_array_equal(rot_gimbal_to_copter(0.0, 0.0), np.eye(3))


def test_gimbal_rotation_quarter_turn_alpha():
    R = rot_gimbal_to_copter(math.pi / 2, 0.0)
    np.testing.assert_allclose(R, [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)


def test_pendulum_rotation_identity_and_azimuth_quarter_turn():
    np.testing.assert_array_equal(rot_world_to_pendulum(0.0, 0.0), np.eye(3))
    np.testing.assert_allclose(rot_world_to_pendulum(0.0, math.pi / 2),
                               [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_rotations_match_composition_of_elementary_rotations():
    rng = np.random.default_rng(1)
    for a, b in rng.uniform(-4, 4, size=(50, 2)):
        np.testing.assert_allclose(rot_gimbal_to_copter(a, b),
                                   _elementary("x", a) @ _elementary("y", b), atol=1e-14)
        # elevation is a rotation about -y
        np.testing.assert_allclose(rot_world_to_pendulum(a, b),
                                   _elementary("z", b) @ _elementary("y", -a), atol=1e-14)


def test_thousand_random_rotations_orthonormal_and_proper():
    rng = np.random.default_rng(7)
    for a, b in rng.uniform(-10, 10, size=(1000, 2)):
        for R in (rot_gimbal_to_copter(a, b), rot_world_to_pendulum(a, b)):
            assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(R) - 1.0) < 1e-12


@given(angles, angles)
def test_transpose_is_inverse(a, b):
    R = rot_gimbal_to_copter(a, b)
    assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
    assert np.max(np.abs(R @ R.T - np.eye(3))) < 1e-12


def test_negated_angles_are_not_the_inverse_in_general():
    R = rot_gimbal_to_copter(0.7, 0.4)
    assert not np.allclose(rot_gimbal_to_copter(-0.7, -0.4), R.T)


def test_copter_angular_velocity_examples():
    assert copter_angular_velocity(1.3, 0.0, 0.0).array().tolist() == [0, 0, 0]
    np.testing.assert_allclose(copter_angular_velocity(0.0, 1.0, 0.0).array(), [1, 0, 0])
    np.testing.assert_allclose(copter_angular_velocity(math.pi / 2, 1.0, 0.0).array(),
                               [0, 0, 1], atol=1e-16)
    assert copter_angular_velocity(0.0, 1.0, 0.0).frame == "C"


def test_pendulum_angular_velocity_examples():
    np.testing.assert_array_equal(pendulum_angular_velocity(0.3, 0.0, 0.0).array(), [0, 0, 0])
    np.testing.assert_array_equal(pendulum_angular_velocity(0.0, 2.0, 0.0).array(), [0, -2, 0])
    np.testing.assert_allclose(pendulum_angular_velocity(math.pi / 2, 0.0, 1.0).array(),
                               [1, 0, 0], atol=1e-16)


@given(angles, rates, rates, rates, rates, st.floats(-3, 3))
def test_angular_velocities_are_linear_in_rates(q, r1, r2, s1, s2, k):
    lhs = copter_angular_velocity(q, r1 + k * s1, r2 + k * s2).array()
    rhs = copter_angular_velocity(q, r1, r2).array() + k * copter_angular_velocity(q, s1, s2).array()
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
    lhs = pendulum_angular_velocity(q, r1 + k * s1, r2 + k * s2).array()
    rhs = (pendulum_angular_velocity(q, r1, r2).array()
           + k * pendulum_angular_velocity(q, s1, s2).array())
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_pendulum_rate_is_consistent_with_rotation_derivative():
    # omega^ = R' dR/dt, expressed in P, from a central difference
    th1, th2, d1, d2, h = 0.4, 1.1, 0.7, -1.3, 1e-6
    R = rot_world_to_pendulum(th1, th2)
    dR = (rot_world_to_pendulum(th1 + h * d1, th2 + h * d2)
          - rot_world_to_pendulum(th1 - h * d1, th2 - h * d2)) / (2 * h)
    W = R.T @ dR
    omega = np.array([W[2, 1], W[0, 2], W[1, 0]])
    np.testing.assert_allclose(pendulum_angular_velocity(th1, d1, d2).array(), omega, atol=1e-8)


def test_copter_rate_is_consistent_with_rotation_derivative():
    a, b, da, db, h = 0.3, -0.6, 1.5, 0.4, 1e-6
    R = rot_gimbal_to_copter(a, b)
    dR = (rot_gimbal_to_copter(a + h * da, b + h * db)
          - rot_gimbal_to_copter(a - h * da, b - h * db)) / (2 * h)
    W = R.T @ dR
    omega = np.array([W[2, 1], W[0, 2], W[1, 0]])
    np.testing.assert_allclose(copter_angular_velocity(b, da, db).array(), omega, atol=1e-8)


def test_vec3_frame_tags_checked():
    a = Vec3(1, 2, 3, "G", "N")
    b = Vec3(1, 1, 1, "C", "N")
    with pytest.raises(FrameMismatch):
        a + b
    with pytest.raises(FrameMismatch):
        require_frame(a, "C")
    assert (a - Vec3(1, 1, 1, "G", "N")).array().tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        Vec3(0, 0, 0, "X", "N")


def test_rotor_params_validation_and_capability():
    p = RotorParams()
    assert 4 * p.f_rotor_max == pytest.approx(p.thrust_capability, rel=0.02)
    # four rotors at the top speed give the configured capability
    assert 4 * p.k_f * 2513.0 ** 2 == pytest.approx(0.6, rel=1e-12)
    assert p.drag_arm == pytest.approx(0.006)
    with pytest.raises(ValueError):
        RotorParams(k_f=-1.0)
    with pytest.raises(ValueError):
        RotorParams(f_rotor_max=0.2)


def test_mix_symmetric_hover():
    res = mix_to_rotors(0.4, (0.0, 0.0, 0.0), ROTOR)
    np.testing.assert_allclose(res.thrusts, [0.1] * 4, rtol=1e-15)
    assert not res.saturated


def test_mix_matches_explicit_matrix_inverse():
    rng = np.random.default_rng(3)
    M = mixing_matrix(ROTOR)
    for _ in range(100):
        f = rng.uniform(0.2, 0.5)
        tau = rng.uniform(-1, 1, 3) * np.array([2e-3, 2e-3, 1e-4])
        res = mix_to_rotors(f, tau, ROTOR)
        w2 = np.linalg.solve(M, np.array([f, *tau]))
        np.testing.assert_allclose(res.omega_sq, w2, rtol=1e-10)


@settings(max_examples=200)
@given(st.floats(0.05, 0.55), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_mix_then_forward_map_is_identity_on_feasible_set(f, ax, ay, az):
    tau = (ax * f * ROTOR.d_r / 4, ay * f * ROTOR.d_r / 4, az * f * ROTOR.drag_arm / 4)
    res = mix_to_rotors(f, tau, ROTOR)
    if res.saturated:
        return
    back = wrench_from_thrusts(res.thrusts, ROTOR)
    np.testing.assert_allclose(back, (f, *tau), rtol=0, atol=1e-12)


def test_mix_negative_speed_flagged():
    res = mix_to_rotors(0.0, (0.0, 0.0, 1e-4), ROTOR)
    assert res.saturated
    assert np.all(res.thrusts >= 0)
    assert np.any(res.omega_sq < 0)
    with pytest.raises(InfeasibleCommand):
        mix_to_rotors(0.0, (0.0, 0.0, 1e-4), ROTOR, strict=True)


def test_mix_accepts_tagged_torque_only_in_copter_frame():
    with pytest.raises(FrameMismatch):
        mix_to_rotors(0.3, Vec3(0, 0, 0, "G", "N*m"), ROTOR)
    res = mix_to_rotors(0.3, Vec3(0, 0, 0, "C", "N*m"), ROTOR)
    np.testing.assert_allclose(res.thrusts, [0.075] * 4)
