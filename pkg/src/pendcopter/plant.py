"""Continuous-time dynamics of the gimbal-copter and the spherical pendulum.

The state vector used for integration is a flat array::

    [theta1, theta2, alpha, beta, theta1_dot, theta2_dot, alpha_dot, beta_dot,
     f1, f2, f3, f4]

where f1..f4 are the lagged rotor thrusts in newtons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import RotorParams, wrench_from_thrusts

N_STATE = 12
IDX_TH1, IDX_TH2, IDX_AL, IDX_BE = 0, 1, 2, 3
IDX_TH1D, IDX_TH2D, IDX_ALD, IDX_BED = 4, 5, 6, 7
IDX_ROTORS = slice(8, 12)

SINGULAR_COS = 1e-6


@dataclass(frozen=True)
class PlantParams:
    """Copter and pendulum parameters in SI units.

    ``J_px`` is zero by construction of the joint and is not a field.
    """

    m_c: float = 0.026
    m_p: float = 0.011
    g: float = 9.81
    L_g: float = 0.337
    L_p: float = 0.285
    J_cx: float = 166e-7
    J_cy: float = 166e-7
    J_cz: float = 293e-7
    J_py: float = 8934.7e-7
    J_pz: float = 8934.7e-7

    def __post_init__(self):
        for name in ("m_c", "m_p", "g", "L_g", "L_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("J_cx", "J_cy", "J_cz", "J_py", "J_pz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not math.isclose(self.J_cx, self.J_cy, rel_tol=1e-9):
            raise ValueError("copter symmetry requires J_cx == J_cy")
        if not math.isclose(self.J_py, self.J_pz, rel_tol=1e-9):
            raise ValueError("pendulum symmetry requires J_py == J_pz")

    @property
    def inertia_elev(self) -> float:
        """Effective inertia about the elevation axis, J_py + m_c L_g^2."""
        return self.J_py + self.m_c * self.L_g ** 2

    @property
    def inertia_azim(self) -> float:
        """Effective inertia about the pendulum z axis, J_pz + m_c L_g^2."""
        return self.J_pz + self.m_c * self.L_g ** 2

    @property
    def gravity_moment(self) -> float:
        """(m_c L_g + m_p L_p) g, the gravity torque at theta1 = 0."""
        return (self.m_c * self.L_g + self.m_p * self.L_p) * self.g

    @property
    def hover_thrust(self) -> float:
        """Thrust along the pendulum z axis balancing gravity at theta1 = 0."""
        return self.gravity_moment / self.L_g


@dataclass
class PlantState:
    theta1: float = 0.0
    theta2: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    theta1_dot: float = 0.0
    theta2_dot: float = 0.0
    alpha_dot: float = 0.0
    beta_dot: float = 0.0
    rotor_thrusts: tuple = (0.0, 0.0, 0.0, 0.0)
    t: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.alpha, self.beta,
                         self.theta1_dot, self.theta2_dot, self.alpha_dot,
                         self.beta_dot, *self.rotor_thrusts], dtype=float)

    @classmethod
    def from_array(cls, y, t: float = 0.0) -> "PlantState":
        y = [float(v) for v in y]
        return cls(*y[:8], rotor_thrusts=tuple(y[8:12]), t=t)


@dataclass(frozen=True)
class Disturbance:
    """External torque applied to one pendulum axis.

    ``impulse`` is realized as a rectangular pulse of ``duration`` seconds.
    """

    channel: str                 # "theta1" | "theta2"
    shape: str                   # "impulse" | "step"
    magnitude: float             # N*m
    start: float                 # s
    duration: float = 0.05       # s, impulses only

    def __post_init__(self):
        if self.channel not in ("theta1", "theta2"):
            raise ValueError(f"unknown disturbance channel {self.channel!r}")
        if self.shape not in ("impulse", "step"):
            raise ValueError(f"unknown disturbance shape {self.shape!r}")
        if not math.isfinite(self.magnitude):
            raise ValueError("disturbance magnitude must be finite")
        if self.start < 0:
            raise ValueError("disturbance start must be >= 0")

    def value(self, t: float) -> float:
        if t < self.start:
            return 0.0
        if self.shape == "step" or t < self.start + self.duration:
            return self.magnitude
        return 0.0


def disturbance_torques(disturbances, t: float) -> tuple[float, float]:
    d1 = d2 = 0.0
    for d in disturbances:
        if d.channel == "theta1":
            d1 += d.value(t)
        else:
            d2 += d.value(t)
    return d1, d2


def gimbal_accel(beta: float, alpha_dot: float, beta_dot: float,
                 tau_alpha: float, tau_beta: float, p: PlantParams) -> tuple[float, float]:
    """Gimbal angular accelerations from the decoupled gimbal dynamics.

    Takes no pendulum state: the gimbal rows do not depend on it.
    """
    sb, cb = math.sin(beta), math.cos(beta)
    dJ = p.J_cz - p.J_cx
    j_alpha = p.J_cx * cb * cb + p.J_cz * sb * sb
    alpha_dd = (tau_alpha - 2.0 * dJ * sb * cb * alpha_dot * beta_dot) / j_alpha
    beta_dd = (dJ * sb * cb * alpha_dot * alpha_dot + tau_beta) / p.J_cy
    return alpha_dd, beta_dd


def pendulum_accel(theta1: float, theta1_dot: float, theta2_dot: float,
                   f: float, alpha: float, beta: float,
                   tau_d: tuple[float, float], p: PlantParams) -> tuple[float, float, bool]:
    """Pendulum angular accelerations driven by the actual thrust vector.

    Returns ``(theta1_dd, theta2_dd, singular)``. The azimuth row is solved
    from its form multiplied through by cos(theta1); when that factor is
    below 1e-6 the row is undefined, ``singular`` is set and theta2_dd is 0
    (theta2_dot held).

    The velocity-product terms use the full effective inertia
    J_pz + m_c L_g^2, which is what keeps the unforced motion conservative.
    """
    s1, c1 = math.sin(theta1), math.cos(theta1)
    Dy, Dz = p.inertia_elev, p.inertia_azim
    fLc = f * p.L_g * math.cos(beta)
    T_y = -fLc * math.cos(alpha)
    T_z = -fLc * math.sin(alpha)
    theta1_dd = (-(p.gravity_moment * c1 + Dz * theta2_dot * theta2_dot * s1 * c1)
                 - T_y + tau_d[0]) / Dy
    if abs(c1) < SINGULAR_COS:
        return theta1_dd, 0.0, True
    theta2_dd = (2.0 * theta1_dot * theta2_dot * s1 + (T_z + tau_d[1]) / Dz) / c1
    return theta1_dd, theta2_dd, False


def plant_derivative(y, rotor_cmd, tau_d, p: PlantParams, rotor: RotorParams,
                     rotor_tau: float = 0.02, pendulum_locked: bool = False):
    """Time derivative of the flat state ``y``.

    Rotor thrusts follow ``rotor_cmd`` through a first-order lag with time
    constant ``rotor_tau`` (0 means the lag state is pinned to the command
    by the caller and has zero derivative). The net thrust and body torques
    come from the lagged thrusts via the mixing map; the gimbal torques are
    tau_alpha = tau_x cos(beta) + tau_z sin(beta), tau_beta = tau_y.

    Returns ``(dy, singular)`` with ``dy`` a list of 12 floats.
    """
    th1, _, al, be, th1d, th2d, ald, bed, r1, r2, r3, r4 = y
    f, tx, ty, tz = wrench_from_thrusts((r1, r2, r3, r4), rotor)
    cb, sb = math.cos(be), math.sin(be)
    al_dd, be_dd = gimbal_accel(be, ald, bed, tx * cb + tz * sb, ty, p)
    if pendulum_locked:
        th1_dd = th2_dd = 0.0
        singular = False
    else:
        th1_dd, th2_dd, singular = pendulum_accel(th1, th1d, th2d, f, al, be, tau_d, p)
    if rotor_tau > 0.0:
        k = 1.0 / rotor_tau
        dr = [k * (c - r) for c, r in zip(rotor_cmd, (r1, r2, r3, r4))]
    else:
        dr = [0.0, 0.0, 0.0, 0.0]
    if pendulum_locked:
        th1d = th2d = 0.0
    return [th1d, th2d, ald, bed, th1_dd, th2_dd, al_dd, be_dd, *dr], singular


def plant_rhs(p: PlantParams, rotor: RotorParams, rotor_tau: float = 0.02):
    """``plant_derivative`` with the parameters bound once.

    Returns ``rhs(y, rotor_cmd, tau_d, locked) -> (dy, singular)``. The
    arithmetic is the same, operation for operation, so results are
    bit-identical; only the attribute lookups and calls are gone.
    """
    d, kd = rotor.d_r, rotor.drag_arm
    J_cx, J_cy, J_cz = p.J_cx, p.J_cy, p.J_cz
    dJ = J_cz - J_cx
    Dy, Dz = p.inertia_elev, p.inertia_azim
    G, L_g = p.gravity_moment, p.L_g
    lag = rotor_tau > 0.0
    k = 1.0 / rotor_tau if lag else 0.0
    sin, cos = math.sin, math.cos

    def rhs(y, rotor_cmd, tau_d, locked):
        th1, _, al, be, th1d, th2d, ald, bed, r1, r2, r3, r4 = y
        f = r1 + r2 + r3 + r4
        tx = d * (r1 + r2 - r3 - r4)
        ty = d * (r1 - r2 - r3 + r4)
        tz = kd * (r1 - r2 + r3 - r4)
        cb, sb = cos(be), sin(be)
        scb = dJ * sb * cb
        al_dd = (tx * cb + tz * sb - 2.0 * scb * ald * bed) / (J_cx * cb * cb + J_cz * sb * sb)
        be_dd = (scb * ald * ald + ty) / J_cy
        singular = False
        if locked:
            th1_dd = th2_dd = th1d = th2d = 0.0
        else:
            s1, c1 = sin(th1), cos(th1)
            fLc = f * L_g * cb
            T_y = -fLc * cos(al)
            th1_dd = (-(G * c1 + Dz * th2d * th2d * s1 * c1) - T_y + tau_d[0]) / Dy
            if abs(c1) < SINGULAR_COS:
                th2_dd, singular = 0.0, True
            else:
                th2_dd = (2.0 * th1d * th2d * s1 + (-fLc * sin(al) + tau_d[1]) / Dz) / c1
        if lag:
            c1_, c2_, c3_, c4_ = rotor_cmd
            dr = (k * (c1_ - r1), k * (c2_ - r2), k * (c3_ - r3), k * (c4_ - r4))
        else:
            dr = (0.0, 0.0, 0.0, 0.0)
        return (th1d, th2d, ald, bed, th1_dd, th2_dd, al_dd, be_dd, *dr), singular

    return rhs


def pendulum_energy(theta1: float, theta1_dot: float, theta2_dot: float,
                    p: PlantParams) -> float:
    """Kinetic plus gravitational energy of the pendulum-copter about the base."""
    c1 = math.cos(theta1)
    kinetic = 0.5 * (p.inertia_elev * theta1_dot ** 2
                     + p.inertia_azim * (c1 * theta2_dot) ** 2)
    return kinetic + p.gravity_moment * math.sin(theta1)


# --------------------------------------------------------------------------
# sensors

@dataclass(frozen=True)
class SensorChain:
    """Encoder and IMU models.

    ``encoder_resolution`` and ``cutoff_hz`` accept ``math.inf`` for an
    ideal channel. Attitude noise standard deviations are per channel.
    """

    encoder_resolution: float = 2048        # counts/rev
    cutoff_hz: float = 20.0
    packet_hz: float = 120.0
    attitude_std: float = 0.005             # rad
    rate_std: float = 0.02                  # rad/s
    seed: int = 0

    def __post_init__(self):
        if not (self.encoder_resolution > 0 and self.cutoff_hz > 0 and self.packet_hz > 0):
            raise ValueError("sensor resolution and rates must be positive")
        if self.attitude_std < 0 or self.rate_std < 0:
            raise ValueError("noise standard deviations must be non-negative")

    def noiseless(self) -> "SensorChain":
        """Same chain with ideal encoders and no IMU noise (filter kept)."""
        return SensorChain(math.inf, self.cutoff_hz, self.packet_hz, 0.0, 0.0, self.seed)

    def streams(self) -> tuple[np.random.Generator, np.random.Generator]:
        enc, att = np.random.SeedSequence(self.seed).spawn(2)
        return np.random.default_rng(enc), np.random.default_rng(att)


def quantize(angle: float, resolution: float) -> float:
    if math.isinf(resolution):
        return angle
    step = 2.0 * math.pi / resolution
    return round(angle / step) * step


class LowPass:
    """Single-pole low-pass discretized by the prewarped bilinear transform.

    The prewarping puts the -3 dB point exactly at ``cutoff_hz`` for the
    sampled signal.
    """

    def __init__(self, cutoff_hz: float, sample_hz: float):
        self.passthrough = math.isinf(cutoff_hz) or cutoff_hz >= 0.5 * sample_hz
        if not self.passthrough:
            k = math.tan(math.pi * cutoff_hz / sample_hz)
            self.b = k / (1.0 + k)
            self.a = (1.0 - k) / (1.0 + k)
        self.y = None
        self.u_prev = None

    def reset(self, value: float):
        self.y = value
        self.u_prev = value

    def __call__(self, u: float) -> float:
        if self.passthrough:
            return u
        if self.y is None:
            self.reset(u)
            return u
        self.y = self.b * (u + self.u_prev) + self.a * self.y
        self.u_prev = u
        return self.y


class EncoderReader:
    """Two encoders, quantized then low-passed, sampled at the packet rate."""

    def __init__(self, chain: SensorChain):
        self.chain = chain
        self.filters = (LowPass(chain.cutoff_hz, chain.packet_hz),
                        LowPass(chain.cutoff_hz, chain.packet_hz))

    def reset(self, theta1: float, theta2: float):
        for flt, th in zip(self.filters, (theta1, theta2)):
            flt.reset(quantize(th, self.chain.encoder_resolution))

    def __call__(self, theta1: float, theta2: float) -> tuple[float, float]:
        res = self.chain.encoder_resolution
        return (self.filters[0](quantize(theta1, res)),
                self.filters[1](quantize(theta2, res)))


def read_encoders(theta1: float, theta2: float, reader: EncoderReader) -> tuple[float, float]:
    """One encoder packet: quantize to the resolution, then low-pass."""
    return reader(theta1, theta2)


class AttitudeReader:
    """Onboard attitude estimate: truth plus white Gaussian noise."""

    def __init__(self, chain: SensorChain, rng: np.random.Generator | None = None):
        self.chain = chain
        self.rng = rng if rng is not None else chain.streams()[1]

    def __call__(self, alpha, beta, alpha_dot, beta_dot) -> tuple[float, float, float, float]:
        sa, sr = self.chain.attitude_std, self.chain.rate_std
        if sa == 0.0 and sr == 0.0:
            return alpha, beta, alpha_dot, beta_dot
        n = self.rng.standard_normal(4)
        return (alpha + sa * n[0], beta + sa * n[1],
                alpha_dot + sr * n[2], beta_dot + sr * n[3])


def read_attitude(alpha, beta, alpha_dot, beta_dot, reader: AttitudeReader):
    return reader(alpha, beta, alpha_dot, beta_dot)
