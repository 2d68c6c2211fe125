"""Pendulum attitude control: pseudo-linear models, LQI synthesis, per-tick law.

Three ways of getting a linear model for the LQI design:

* SPL - Taylor linearization at a fixed equilibrium; u = eta + u_eq.
* SFL - exact cancellation of the drift using measured rates; the
  equivalent plant is two double integrators and u = G2^-1 (eta - F2).
* PFL - as SFL, but the velocity products inside F2 use the commanded
  (reference) rates instead of the noisy measured ones.

The augmented state is ordered [e1, e2, e1_dot, e2_dot, int e1, int e2]
with e_i = theta_i - theta_i,ref.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .allocation import SingularityPolicy
from .errors import SingularConfiguration, SingularEquilibrium
from .plant import SINGULAR_COS, PlantParams
from .riccati import care_residual, is_hurwitz, lqr_gain

METHODS = ("SPL", "SFL", "PFL")

# Q, R in torque units for the augmented state
DEFAULT_Q = (1e4, 1e2, 0.0, 0.0, 1e2, 1e2)
DEFAULT_R = (1e6, 1e6)


def check_method(method: str) -> str:
    m = method.upper()
    if m not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return m


@dataclass(frozen=True)
class LinearModel:
    """Pseudo-linear model x_dot = A x + B eta.

    ``weight_scale`` S converts the model input to torque units
    (eta_torque = S eta) so that one pair of weights (Q, R) means the same
    thing for every method.
    """

    A: np.ndarray
    B: np.ndarray
    u_eq: np.ndarray
    method: str
    theta1_eq: float = 0.0
    weight_scale: np.ndarray = field(default_factory=lambda: np.eye(2))


def linearize_spl(x_eq, p: PlantParams) -> LinearModel:
    """Small-perturbation model about a resting equilibrium.

    ``x_eq`` is either theta1_eq or a pendulum state [theta1, theta2, ...];
    only theta1 matters.
    """
    theta1_eq = float(np.atleast_1d(x_eq)[0])
    c1, s1 = math.cos(theta1_eq), math.sin(theta1_eq)
    if abs(c1) <= SINGULAR_COS:
        raise SingularEquilibrium(f"cos(theta1_eq) = {c1:.3g}")
    Dy, Dz = p.inertia_elev, p.inertia_azim
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    A[2, 0] = p.gravity_moment * s1 / Dy
    B = np.zeros((4, 2))
    B[2, 0] = -1.0 / Dy
    B[3, 1] = 1.0 / (c1 * Dz)
    u_eq = np.array([-p.gravity_moment * c1, 0.0])
    return LinearModel(A, B, u_eq, "SPL", theta1_eq)


def sfl_model(p: PlantParams, method: str = "SFL") -> LinearModel:
    """Two decoupled double integrators driven by angular accelerations."""
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    B = np.zeros((4, 2))
    B[2, 0] = B[3, 1] = 1.0
    scale = np.diag([-p.inertia_elev, p.inertia_azim])
    return LinearModel(A, B, np.zeros(2), check_method(method), 0.0, scale)


def drift(x_p, p: PlantParams) -> tuple[float, float]:
    """Nonlinear drift F2 of the pendulum accelerations (undefined at cos(theta1) = 0)."""
    th1, _, th1d, th2d = x_p
    s1, c1 = math.sin(th1), math.cos(th1)
    a1 = -(p.gravity_moment * c1 + p.inertia_azim * th2d * th2d * s1 * c1) / p.inertia_elev
    a2 = 2.0 * th1d * th2d * s1 / c1
    return a1, a2


def input_matrix(theta1: float, p: PlantParams) -> np.ndarray:
    """G2(x_p): accelerations per unit (T_Y, T_Z)."""
    return np.diag([-1.0 / p.inertia_elev, 1.0 / (math.cos(theta1) * p.inertia_azim)])


def input_matrix_inv(theta1: float, p: PlantParams) -> np.ndarray:
    return np.diag([-p.inertia_elev, math.cos(theta1) * p.inertia_azim])


def sfl_input(x_p, eta, p: PlantParams) -> np.ndarray:
    """Torque (T_Y, T_Z) that makes the pendulum accelerations equal ``eta``."""
    th1 = x_p[0]
    if abs(math.cos(th1)) < SINGULAR_COS:
        raise SingularConfiguration(f"cos(theta1) = {math.cos(th1):.3g}")
    a1, a2 = drift(x_p, p)
    return np.array([-p.inertia_elev * (eta[0] - a1),
                     math.cos(th1) * p.inertia_azim * (eta[1] - a2)])


def pfl_input(x_p, ref_rates, eta, p: PlantParams) -> np.ndarray:
    """As :func:`sfl_input` with the velocity products built from reference rates."""
    return sfl_input((x_p[0], x_p[1], ref_rates[0], ref_rates[1]), eta, p)


def augment(model: LinearModel) -> tuple[np.ndarray, np.ndarray]:
    n, m = model.B.shape
    C = np.zeros((m, n))
    C[0, 0] = C[1, 1] = 1.0
    A_aug = np.block([[model.A, np.zeros((n, m))], [C, np.zeros((m, m))]])
    B_aug = np.vstack([model.B, np.zeros((m, m))])
    return A_aug, B_aug


@dataclass(frozen=True)
class LqiGain:
    K: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    residual: float

    def closed_loop_poles(self, model: LinearModel) -> np.ndarray:
        A_aug, B_aug = augment(model)
        return np.linalg.eigvals(A_aug - B_aug @ self.K)


def synthesize_lqi(model: LinearModel, Q=DEFAULT_Q, R=DEFAULT_R) -> LqiGain:
    """LQI gain for ``model``; checks the CARE residual and Hurwitz closed loop."""
    Q = np.diag(Q) if np.ndim(Q) == 1 else np.asarray(Q, float)
    R = np.diag(R) if np.ndim(R) == 1 else np.asarray(R, float)
    S = model.weight_scale
    R_model = S.T @ R @ S
    A_aug, B_aug = augment(model)
    K, P = lqr_gain(A_aug, B_aug, Q, R_model)
    residual = care_residual(A_aug, B_aug, Q, R_model, P)
    assert residual < 1e-9 * (1.0 + np.linalg.norm(P, "fro")), residual
    assert is_hurwitz(A_aug - B_aug @ K)
    return LqiGain(K, Q, R_model, P, residual)


def build_model(method: str, p: PlantParams, theta1_eq: float = 0.0) -> LinearModel:
    method = check_method(method)
    if method == "SPL":
        return linearize_spl(theta1_eq, p)
    return sfl_model(p, method)


# --------------------------------------------------------------------------
# per-tick law

class PendulumMeasurement(NamedTuple):
    theta1: float
    theta2: float
    theta1_dot: float
    theta2_dot: float


class PendulumReference(NamedTuple):
    theta1: float
    theta2: float
    theta1_dot: float = 0.0
    theta2_dot: float = 0.0


class HighLevelOutput(NamedTuple):
    T_Y: float
    T_Z: float
    saturated: bool
    azimuth_off: bool


@dataclass
class HighLevelState:
    x_m: np.ndarray = field(default_factory=lambda: np.zeros(2))
    e_prev: np.ndarray | None = None
    method: str = "PFL"


@dataclass(frozen=True)
class HighLevelLimits:
    torque: float = 0.6 * 0.337        # N*m per channel
    integral: float = 3.0              # rad*s
    policy: SingularityPolicy = SingularityPolicy()


def wrap_angle(a: float) -> float:
    return math.remainder(a, 2.0 * math.pi)


def highlevel_step(meas: PendulumMeasurement, ref: PendulumReference, gain: LqiGain,
                   model: LinearModel, state: HighLevelState, dt: float,
                   p: PlantParams, limits: HighLevelLimits = HighLevelLimits()) -> HighLevelOutput:
    """One controller tick: integrate the error, eta = -K x_aug, map eta to torque.

    Within the singularity band the azimuth channel is switched off: T_Z = 0
    and its integrator is frozen.
    """
    th1 = meas.theta1
    e = np.array([th1 - ref.theta1, wrap_angle(meas.theta2 - ref.theta2)])
    e_dot = np.array([meas.theta1_dot - ref.theta1_dot, meas.theta2_dot - ref.theta2_dot])
    azimuth_off = limits.policy.in_band(th1)

    if state.e_prev is not None:
        step = 0.5 * dt * (state.e_prev + e)
        if azimuth_off:
            step[1] = 0.0
        state.x_m = np.clip(state.x_m + step, -limits.integral, limits.integral)
    state.e_prev = e

    x_aug = np.concatenate([e, e_dot, state.x_m])
    eta = -gain.K @ x_aug

    if model.method == "SPL":
        u = eta + model.u_eq
    else:
        if model.method == "SFL":
            rates = (meas.theta1_dot, meas.theta2_dot)
        else:
            rates = (ref.theta1_dot, ref.theta2_dot)
        if azimuth_off:
            a1, _ = drift((th1, meas.theta2, rates[0], rates[1]), p)
            u = np.array([-p.inertia_elev * (eta[0] - a1), 0.0])
        elif model.method == "SFL":
            u = sfl_input((th1, meas.theta2, *rates), eta, p)
        else:
            u = pfl_input((th1, meas.theta2), rates, eta, p)
    if azimuth_off:
        u[1] = 0.0
    T_Y = min(max(u[0], -limits.torque), limits.torque)
    T_Z = min(max(u[1], -limits.torque), limits.torque)
    return HighLevelOutput(T_Y, T_Z, T_Y != u[0] or T_Z != u[1], azimuth_off)


class PendulumController:
    """High-level controller fed with encoder angles only.

    Rates come from the first difference of successive filtered angles at
    the controller rate.
    """

    def __init__(self, method: str, p: PlantParams, dt: float, theta1_eq: float = 0.0,
                 Q=DEFAULT_Q, R=DEFAULT_R, limits: HighLevelLimits = HighLevelLimits()):
        self.method = check_method(method)
        self.p = p
        self.dt = dt
        self.limits = limits
        self.model = build_model(self.method, p, theta1_eq)
        self.gain = synthesize_lqi(self.model, Q, R)
        self.state = HighLevelState(method=self.method)
        self._prev_angles = None

    def reset(self, theta1: float, theta2: float):
        self.state = HighLevelState(method=self.method)
        self._prev_angles = (theta1, theta2)

    def measurement(self, theta1: float, theta2: float) -> PendulumMeasurement:
        if self._prev_angles is None:
            rates = (0.0, 0.0)
        else:
            rates = ((theta1 - self._prev_angles[0]) / self.dt,
                     (theta2 - self._prev_angles[1]) / self.dt)
        self._prev_angles = (theta1, theta2)
        return PendulumMeasurement(theta1, theta2, *rates)

    def __call__(self, theta1: float, theta2: float, ref: PendulumReference) -> HighLevelOutput:
        meas = self.measurement(theta1, theta2)
        return highlevel_step(meas, ref, self.gain, self.model, self.state, self.dt,
                              self.p, self.limits)
