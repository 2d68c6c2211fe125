"""Gimbal attitude control: cascaded P-position / PI-velocity loops with
SPL, SFL or PFL torque computation.

The PID cascade produces desired angular accelerations; the torque stage
turns them into (tau_alpha, tau_beta) using an inertia model of the gimbal:

* SPL scales by constant inertias evaluated at beta_eq;
* SFL uses the exact inertia J_cx cos^2(beta) + J_cz sin^2(beta) and
  cancels the velocity coupling with measured rates;
* PFL is SFL with the commanded (reference) rates inside the coupling terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DegenerateConfiguration, DegenerateEquilibrium
from .highlevel import check_method
from .plant import PlantParams

_DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class PidGains:
    """Per-axis cascade gains: position P (1/s), velocity P (1/s), velocity I (1/s^2)."""

    kp_pos: float
    kp_vel: float
    ki_vel: float
    rate_limit: float = math.inf   # rad/s, bound on the position-loop output

    def __post_init__(self):
        if not self.rate_limit > 0:
            raise ValueError("rate limit must be positive")
        if min(self.kp_pos, self.kp_vel, self.ki_vel) < 0:
            raise ValueError("PID gains must be non-negative")
        if not self.kp_vel > self.kp_pos:
            raise ValueError("velocity loop must be faster than the position loop")


# alpha: tuned for a 45 deg step at beta = 45 deg without rotor saturation.
# Its torque is partly yaw torque, which the rotors produce weakly.
ALPHA_GAINS = PidGains(kp_pos=6.0, kp_vel=12.0, ki_vel=50.0)
# beta: roll/pitch torque only, so it can afford a much faster loop; near
# theta1 = pi/2 the pendulum torque is produced by tilting beta.
BETA_GAINS = PidGains(kp_pos=15.0, kp_vel=75.0, ki_vel=150.0)


@dataclass(frozen=True)
class GimbalGains:
    alpha: PidGains = ALPHA_GAINS
    beta: PidGains = BETA_GAINS


class GimbalReference(NamedTuple):
    alpha: float
    beta: float
    alpha_dot: float = 0.0
    beta_dot: float = 0.0


class AttitudeMeasurement(NamedTuple):
    alpha: float
    beta: float
    alpha_dot: float
    beta_dot: float


@dataclass
class GimbalCtlState:
    integ: list = field(default_factory=lambda: [0.0, 0.0])   # integral of rate error, rad
    method: str = "PFL"
    rate_cmd: tuple = (0.0, 0.0)


def cascade_step(ref: GimbalReference, meas: AttitudeMeasurement, gains: GimbalGains,
                 state: GimbalCtlState, dt: float,
                 integral_limit: float = 20.0) -> tuple[float, float]:
    """Desired accelerations from the position-P / velocity-PI cascade.

    The integral contribution ki * int(e_rate) is clamped to
    ``integral_limit`` (rad/s^2). The velocity commands are kept in
    ``state.rate_cmd`` for inspection.
    """
    out = []
    cmds = []
    for i, (g, r, y, r_ff, y_dot) in enumerate((
            (gains.alpha, ref.alpha, meas.alpha, ref.alpha_dot, meas.alpha_dot),
            (gains.beta, ref.beta, meas.beta, ref.beta_dot, meas.beta_dot))):
        rate_cmd = min(max(g.kp_pos * (r - y), -g.rate_limit), g.rate_limit) + r_ff
        e_rate = rate_cmd - y_dot
        integ = state.integ[i] + e_rate * dt
        if g.ki_vel > 0.0:
            bound = integral_limit / g.ki_vel
            integ = min(max(integ, -bound), bound)
        state.integ[i] = integ
        out.append(g.kp_vel * e_rate + g.ki_vel * integ)
        cmds.append(rate_cmd)
    state.rate_cmd = (cmds[0], cmds[1])
    return out[0], out[1]


def equivalent_inertia_spl(beta_eq: float, p: PlantParams) -> tuple[float, float]:
    """Constant (J_alpha, J_beta) of the small-perturbation gimbal model."""
    cb, sb = math.cos(beta_eq), math.sin(beta_eq)
    if abs(cb + sb) < _DEGENERATE_TOL:
        raise DegenerateEquilibrium(f"beta_eq = {beta_eq}")
    return (p.J_cx * cb + p.J_cz * sb) / (cb + sb), p.J_cy


def gimbal_inertia(beta: float, p: PlantParams) -> float:
    """Inertia seen by tau_alpha at attitude beta."""
    cb, sb = math.cos(beta), math.sin(beta)
    return p.J_cx * cb * cb + p.J_cz * sb * sb


def torque_sfl(acc_d, beta: float, alpha_dot: float, beta_dot: float,
               p: PlantParams) -> tuple[float, float]:
    cb, sb = math.cos(beta), math.sin(beta)
    if abs(cb + sb) < _DEGENERATE_TOL:
        raise DegenerateConfiguration(f"beta = {beta}")
    dJ = (p.J_cz - p.J_cx) * sb * cb
    gamma = 2.0 * dJ * alpha_dot * beta_dot
    phi = -dJ * alpha_dot * alpha_dot
    return gimbal_inertia(beta, p) * acc_d[0] + gamma, p.J_cy * acc_d[1] + phi


def torque_pfl(acc_d, beta: float, alpha_dot_cmd: float, beta_dot_cmd: float,
               p: PlantParams) -> tuple[float, float]:
    return torque_sfl(acc_d, beta, alpha_dot_cmd, beta_dot_cmd, p)


def torque_spl(acc_d, beta_eq: float, p: PlantParams) -> tuple[float, float]:
    j_alpha, j_beta = equivalent_inertia_spl(beta_eq, p)
    return j_alpha * acc_d[0], j_beta * acc_d[1]


class GimbalController:
    """Cascade plus torque stage; consumes attitude measurements only."""

    def __init__(self, method: str, p: PlantParams, dt: float,
                 gains: GimbalGains = GimbalGains(), beta_eq: float = 0.0,
                 integral_limit: float = 20.0):
        self.method = check_method(method)
        self.p = p
        self.dt = dt
        self.gains = gains
        self.beta_eq = beta_eq
        self.integral_limit = integral_limit
        if self.method == "SPL":
            equivalent_inertia_spl(beta_eq, p)
        self.state = GimbalCtlState(method=self.method)

    def desired_accel(self, ref: GimbalReference, meas: AttitudeMeasurement):
        return cascade_step(ref, meas, self.gains, self.state, self.dt, self.integral_limit)

    def __call__(self, ref: GimbalReference, meas: AttitudeMeasurement) -> tuple[float, float]:
        acc = self.desired_accel(ref, meas)
        if self.method == "SPL":
            return torque_spl(acc, self.beta_eq, self.p)
        if self.method == "SFL":
            return torque_sfl(acc, meas.beta, meas.alpha_dot, meas.beta_dot, self.p)
        return torque_pfl(acc, meas.beta, ref.alpha_dot, ref.beta_dot, self.p)
