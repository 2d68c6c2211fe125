"""Frames, rotations, angular-velocity compositions and rotor mixing.

Frames: W (world), P (pendulum, x along the rod), G (gimbal outer ring,
aligned with P) and C (copter body). The gimbal angles are alpha about
P/G +x and beta about G +y; the pendulum angles are theta2 (azimuth, about
W +z) and theta1 (elevation, about P -y).

Rotor layout implied by the mixing matrix below, seen from +z of frame C::

        1 (-d, +d)      2 (+d, +d)
        4 (-d, -d)      3 (+d, -d)

Rotors 1 and 3 produce positive yaw reaction torque, 2 and 4 negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import FrameMismatch, InfeasibleCommand

RotationMatrix = np.ndarray

FRAMES = ("W", "P", "G", "C")
UNITS = ("N", "N*m", "rad/s", "m")


@dataclass(frozen=True)
class Vec3:
    """A 3-vector tagged with the frame it is expressed in and its unit."""

    x: float
    y: float
    z: float
    frame: str
    unit: str

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")

    @classmethod
    def of(cls, values, frame: str, unit: str) -> "Vec3":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z, frame, unit)

    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def _check(self, other: "Vec3"):
        if (self.frame, self.unit) != (other.frame, other.unit):
            raise FrameMismatch(
                f"{self.frame}[{self.unit}] vs {other.frame}[{other.unit}]")

    def __add__(self, other: "Vec3") -> "Vec3":
        self._check(other)
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z,
                    self.frame, self.unit)

    def __sub__(self, other: "Vec3") -> "Vec3":
        self._check(other)
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z,
                    self.frame, self.unit)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(k * self.x, k * self.y, k * self.z, self.frame, self.unit)


def require_frame(v: Vec3, frame: str, unit: str | None = None) -> Vec3:
    """Interface-boundary check for frame (and optionally unit) tags."""
    if v.frame != frame or (unit is not None and v.unit != unit):
        raise FrameMismatch(
            f"expected {frame}[{unit or '*'}], got {v.frame}[{v.unit}]")
    return v


def rot_gimbal_to_copter(alpha: float, beta: float) -> RotationMatrix:
    """Copter-to-gimbal rotation ^G_C R for outer ring ``alpha`` then inner ring ``beta``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [cb, 0.0, sb],
        [sa * sb, ca, -sa * cb],
        [-ca * sb, sa, ca * cb],
    ])


def rot_world_to_pendulum(theta1: float, theta2: float) -> RotationMatrix:
    """Pendulum-to-world rotation ^W_P R for azimuth ``theta2`` then elevation ``theta1``."""
    c1, s1 = math.cos(theta1), math.sin(theta1)
    c2, s2 = math.cos(theta2), math.sin(theta2)
    return np.array([
        [c1 * c2, -s2, -s1 * c2],
        [c1 * s2, c2, -s1 * s2],
        [s1, 0.0, c1],
    ])


def copter_angular_velocity(beta: float, alpha_dot: float, beta_dot: float) -> Vec3:
    return Vec3(alpha_dot * math.cos(beta), beta_dot, alpha_dot * math.sin(beta),
                "C", "rad/s")


def pendulum_angular_velocity(theta1: float, theta1_dot: float,
                              theta2_dot: float) -> Vec3:
    # the x component is physically blocked by the joint (J_px = 0)
    return Vec3(theta2_dot * math.sin(theta1), -theta1_dot,
                theta2_dot * math.cos(theta1), "P", "rad/s")


@dataclass(frozen=True)
class RotorParams:
    """Rotor coefficients.

    ``k_f`` and ``k_m`` are estimates: they are picked so that four rotors at
    2513 rad/s give the 0.6 N thrust capability of the copter, with a
    drag-to-thrust ratio of 6 mm. ``d_r`` is the arm offset of a 92 mm
    diagonal X frame.
    """

    k_f: float = 0.15 / 2513.0 ** 2
    k_m: float = 0.006 * 0.15 / 2513.0 ** 2
    d_r: float = 0.0325
    f_rotor_max: float = 0.1472
    thrust_capability: float = 0.6

    def __post_init__(self):
        for name in ("k_f", "k_m", "d_r", "f_rotor_max", "thrust_capability"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if abs(4 * self.f_rotor_max - self.thrust_capability) > 0.02 * self.thrust_capability:
            raise ValueError("4*f_rotor_max must match thrust_capability within 2%")

    @property
    def drag_arm(self) -> float:
        """Yaw torque per newton of rotor thrust, k_m / k_f."""
        return self.k_m / self.k_f


def mixing_matrix(params: RotorParams) -> np.ndarray:
    """Map from squared rotor speeds to (f, tau_x, tau_y, tau_z)."""
    kf, km, d = params.k_f, params.k_m, params.d_r
    return np.array([
        [kf, kf, kf, kf],
        [kf * d, kf * d, -kf * d, -kf * d],
        [kf * d, -kf * d, -kf * d, kf * d],
        [km, -km, km, -km],
    ])


def wrench_from_thrusts(thrusts, params: RotorParams) -> tuple[float, float, float, float]:
    """Forward map: per-rotor thrusts (N) to (f, tau_x, tau_y, tau_z)."""
    f1, f2, f3, f4 = thrusts
    d, kd = params.d_r, params.drag_arm
    return (f1 + f2 + f3 + f4,
            d * (f1 + f2 - f3 - f4),
            d * (f1 - f2 - f3 + f4),
            kd * (f1 - f2 + f3 - f4))


class MixResult(NamedTuple):
    thrusts: np.ndarray      # clamped per-rotor thrusts, N
    omega_sq: np.ndarray     # unclamped squared speeds, rad^2/s^2
    saturated: bool


def mix_to_rotors(f: float, tau, params: RotorParams, strict: bool = False) -> MixResult:
    """Solve the mixing equations for rotor thrusts.

    Rotor thrust is the actuator variable everywhere else; squared speeds
    only appear here. Results are clamped to ``[0, f_rotor_max]`` and
    ``saturated`` reports whether clamping was needed. With ``strict=True``
    an infeasible request raises :class:`InfeasibleCommand` instead.
    """
    if isinstance(tau, Vec3):
        require_frame(tau, "C", "N*m")
        tau = (tau.x, tau.y, tau.z)
    tx, ty, tz = tau
    # closed-form inverse of the mixing matrix
    a = f / 4.0
    bx = tx / (4.0 * params.d_r)
    by = ty / (4.0 * params.d_r)
    bz = tz / (4.0 * params.drag_arm)
    # plain floats: this runs at the servo rate and numpy overhead dominates at n = 4
    raw = (a + bx + by + bz, a + bx - by - bz, a - bx - by + bz, a - bx + by - bz)
    kf, fmax = params.k_f, params.f_rotor_max
    omega_sq = np.array([t / kf for t in raw])
    infeasible = min(raw) / kf < 0.0 or max(raw) > fmax
    if infeasible and strict:
        raise InfeasibleCommand(f"rotor thrusts {raw} outside [0, {fmax}]")
    clamped = np.array([min(max(t, 0.0), fmax) for t in raw])
    return MixResult(clamped, omega_sq, infeasible)
