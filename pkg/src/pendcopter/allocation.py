"""Pendulum torque command -> gimbal thrust vector -> (f, alpha_d, beta_d) -> rotors.

The thrust vector F in the gimbal frame has two components fixed by the
pendulum torque (F_y, F_z). The third, F_x, is free and set by a policy:

* normal mode: F_x = |tan theta1| * sqrt(F_y^2 + F_z^2), which makes
  beta_d = theta1 when F_y = 0 so the copter stays level;
* singular mode (theta1 near pi/2): F_x from the vertical force balance
  F_x sin(theta1) + F_z cos(theta1) = (m_c + m_p) g.

Within ``delta`` of pi/2 the azimuth channel is switched off (F_y = 0) and
F_x is blended linearly from the normal to the singular value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import MixResult, RotorParams, Vec3, mix_to_rotors, require_frame
from .plant import PlantParams


@dataclass(frozen=True)
class SingularityPolicy:
    delta: float = math.pi / 9
    blend_width: float = math.pi / 18

    def __post_init__(self):
        if not (0.0 < self.blend_width <= self.delta < math.pi / 2):
            raise ValueError("need 0 < blend_width <= delta < pi/2")

    def in_band(self, theta1: float) -> bool:
        return abs(theta1 - math.pi / 2) < self.delta

    def weight(self, theta1: float) -> float:
        """Singular-mode weight: 0 at the band edge, 1 once ``blend_width`` inside."""
        depth = self.delta - abs(theta1 - math.pi / 2)
        if depth <= 0.0:
            return 0.0
        return min(1.0, depth / self.blend_width)


@dataclass(frozen=True)
class ThrustCommand:
    f: float
    alpha_d: float
    beta_d: float
    F: Vec3
    mode: str = "normal"          # normal | blend | singular
    weight: float = 0.0
    saturated: bool = False


def fab_from_thrust_vector(F: Vec3) -> tuple[float, float, float]:
    """Inverse kinematics (f, alpha, beta) of a gimbal-frame thrust vector.

    beta is taken from asin, so cos(beta) >= 0. A zero vector maps to
    (0, 0, 0).
    """
    require_frame(F, "G", "N")
    f = F.norm()
    if f == 0.0:
        return 0.0, 0.0, 0.0
    return f, math.atan2(-F.y, F.z), math.asin(max(-1.0, min(1.0, F.x / f)))


def fab_level_branch(F: Vec3) -> tuple[float, float, float]:
    """Inverse kinematics choosing the branch with |alpha| <= pi/2.

    Same as :func:`fab_from_thrust_vector` when F_z >= 0. For F_z < 0 the
    equivalent solution (alpha - pi, pi - beta) is returned, so alpha stays
    continuous when F_z changes sign while the thrust points along the rod.
    """
    f, alpha, beta = fab_from_thrust_vector(F)
    if F.z >= 0.0 or f == 0.0:
        return f, alpha, beta
    alpha = math.atan2(F.y, -F.z)
    beta = math.copysign(math.pi, beta) - beta if beta != 0.0 else math.pi
    return f, alpha, beta


def thrust_vector_from_fab(f: float, alpha: float, beta: float) -> Vec3:
    """Forward kinematics: F = ^G_C R (f z_hat)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return Vec3(f * sb, -f * sa * cb, f * ca * cb, "G", "N")


def _cap_thrust(Fx: float, Fy: float, Fz: float, limit: float):
    """Shrink F_x first, then (F_y, F_z) proportionally, until |F| <= limit."""
    lateral_sq = Fy * Fy + Fz * Fz
    if Fx * Fx + lateral_sq <= limit * limit:
        return Fx, Fy, Fz, False
    if lateral_sq <= limit * limit:
        return math.copysign(math.sqrt(limit * limit - lateral_sq), Fx), Fy, Fz, True
    k = limit / math.sqrt(lateral_sq)
    return 0.0, k * Fy, k * Fz, True


def torque_to_thrust_vector(u_p: tuple[float, float], theta1: float, p: PlantParams,
                            policy: SingularityPolicy = SingularityPolicy(),
                            thrust_limit: float = math.inf) -> ThrustCommand:
    """Map the pendulum torque command (T_Y, T_Z) to a thrust command."""
    T_Y, T_Z = u_p
    Fz = -T_Y / p.L_g
    Fy = T_Z / p.L_g
    w = 0.0
    mode = "normal"
    if policy.in_band(theta1):
        Fy = 0.0
        w = policy.weight(theta1)
        mode = "singular" if w >= 1.0 else "blend"
    Fx = 0.0
    if w < 1.0:
        Fx += (1.0 - w) * abs(math.tan(theta1)) * math.hypot(Fy, Fz)
    if w > 0.0:
        s1 = math.sin(theta1)
        Fx += w * ((p.m_c + p.m_p) * p.g - Fz * math.cos(theta1)) / s1
    Fx, Fy, Fz, saturated = _cap_thrust(Fx, Fy, Fz, thrust_limit)
    F = Vec3(Fx, Fy, Fz, "G", "N")
    if mode == "normal":
        f, alpha, beta = fab_from_thrust_vector(F)
    else:
        f, alpha, beta = fab_level_branch(F)
    return ThrustCommand(f, alpha, beta, F, mode, w, saturated)


def gimbal_torque_to_body(tau_alpha: float, tau_beta: float, beta: float) -> tuple[float, float, float]:
    """Body torques realizing (tau_alpha, tau_beta) with zero gimbal-z moment."""
    return tau_alpha * math.cos(beta), tau_beta, tau_alpha * math.sin(beta)


def allocate_rotors(cmd: ThrustCommand | float, tau_xyz, params: RotorParams) -> MixResult:
    """Per-rotor thrusts for the commanded net thrust and body torques.

    Never raises: infeasible requests come back clamped with ``saturated``.
    """
    f = cmd.f if isinstance(cmd, ThrustCommand) else float(cmd)
    return mix_to_rotors(f, tau_xyz, params)
