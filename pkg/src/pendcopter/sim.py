"""Fixed-step integration and the multirate sampled-data loop.

Physics runs on a 1 kHz grid; the gimbal servo, pendulum controller,
encoder packets and logging fire on ticks of that grid. Every command is
held constant (zero-order hold) until its producer fires again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import (SingularityPolicy, gimbal_torque_to_body, mix_to_rotors,
                         torque_to_thrust_vector)
from .errors import NonFiniteState, PendcopterError, SimulationError
from .highlevel import DEFAULT_Q, DEFAULT_R, HighLevelLimits, PendulumController, PendulumReference
from .kinematics import RotorParams
from .lowlevel import AttitudeMeasurement, GimbalController, GimbalGains, GimbalReference
from .plant import (AttitudeReader, EncoderReader, PlantParams, SensorChain,
                    disturbance_torques, plant_rhs)


def rk4_step(fun, x, dt: float):
    """Classical Runge-Kutta step for ``x_dot = fun(x)`` on numpy arrays."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, float)
    k1 = np.asarray(fun(x))
    k2 = np.asarray(fun(x + 0.5 * dt * k1))
    k3 = np.asarray(fun(x + 0.5 * dt * k2))
    k4 = np.asarray(fun(x + dt * k3))
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"non-finite state after RK4 step: {out}")
    return out


def rk4_rhs(rhs, y, rotor_cmd, tau_d, locked, dt):
    """RK4 on a bound plant right-hand side, inputs held over the step.

    Returns (y_next, singular).
    """
    h2 = 0.5 * dt
    k1, s1 = rhs(y, rotor_cmd, tau_d, locked)
    k2, s2 = rhs([a + h2 * b for a, b in zip(y, k1)], rotor_cmd, tau_d, locked)
    k3, s3 = rhs([a + h2 * b for a, b in zip(y, k2)], rotor_cmd, tau_d, locked)
    k4, s4 = rhs([a + dt * b for a, b in zip(y, k3)], rotor_cmd, tau_d, locked)
    h6 = dt / 6.0
    out = [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]
    return out, s1 or s2 or s3 or s4


def rk4_plant(y, rotor_cmd, tau_d, p, rotor, rotor_tau, locked, dt):
    """RK4 on the plant with inputs held over the step. Returns (y_next, singular)."""
    return rk4_rhs(plant_rhs(p, rotor, rotor_tau), y, rotor_cmd, tau_d, locked, dt)


@dataclass(frozen=True)
class RateSchedule:
    physics_dt: float = 1e-3
    lowlevel_period: float = 2e-3
    highlevel_period: float = 1e-2
    encoder_period: float = 1.0 / 120.0

    def __post_init__(self):
        if not self.physics_dt > 0:
            raise ValueError("physics step must be positive")
        for name in ("lowlevel_period", "highlevel_period"):
            self.ratio(getattr(self, name))
        if self.encoder_period < self.physics_dt:
            raise ValueError("encoder period shorter than the physics step")

    def ratio(self, period: float) -> int:
        n = round(period / self.physics_dt)
        if n < 1 or abs(n * self.physics_dt - period) > 1e-9 * max(1.0, period):
            raise ValueError(f"period {period} is not a multiple of {self.physics_dt}")
        return n

    def encoder_tick(self, n: int) -> int:
        """Physics tick of the n-th encoder packet (nearest tick, no drift)."""
        return math.floor(n * self.encoder_period / self.physics_dt + 0.5)


LOG_COLUMNS = (
    "t",
    "theta1_ref", "theta2_ref", "alpha_ref", "beta_ref",
    "theta1", "theta2", "alpha", "beta",
    "theta1_dot", "theta2_dot", "alpha_dot", "beta_dot",
    "theta1_meas", "theta2_meas", "alpha_meas", "beta_meas",
    "T_Y", "T_Z", "f", "alpha_d", "beta_d", "tau_alpha", "tau_beta",
    "rotor1", "rotor2", "rotor3", "rotor4",
    "saturated", "singular", "mode_weight",
)


@dataclass
class TrajectoryLog:
    """Column-oriented log sampled at a fixed period."""

    columns: dict = field(default_factory=lambda: {c: [] for c in LOG_COLUMNS})
    scenario: str = ""
    diverged: bool = False
    divergence_time: float = math.nan

    def append(self, row):
        for c, v in zip(LOG_COLUMNS, row):
            self.columns[c].append(v)

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self[c] for c in LOG_COLUMNS]) if len(self) else np.zeros((0, len(LOG_COLUMNS)))


@dataclass
class SimConfig:
    """Everything about a run that is not the scenario itself."""

    plant: PlantParams = field(default_factory=PlantParams)
    rotor: RotorParams = field(default_factory=RotorParams)
    rotor_tau: float = 0.02
    sensors: SensorChain = field(default_factory=SensorChain)
    schedule: RateSchedule = field(default_factory=RateSchedule)
    gimbal_gains: GimbalGains = field(default_factory=GimbalGains)
    gimbal_integral_limit: float = 20.0
    Q: tuple = DEFAULT_Q
    R: tuple = DEFAULT_R
    limits: HighLevelLimits = field(default_factory=HighLevelLimits)
    policy: SingularityPolicy = field(default_factory=SingularityPolicy)
    thrust_limit: float = 0.6
    gimbal_feedforward: bool = True
    divergence_band: tuple = (-math.pi / 4, 5 * math.pi / 4)


def run(scenario, config: SimConfig | None = None) -> TrajectoryLog:
    """Simulate ``scenario`` and return its log.

    Controllers only ever see sensor outputs. A run stops early when
    theta1 leaves the divergence band or the state stops being finite;
    the log then ends at the last good sample and ``diverged`` is set.
    """
    cfg = config or SimConfig()
    p, rotor, sched = cfg.plant, cfg.rotor, cfg.schedule
    dt = sched.physics_dt
    log = TrajectoryLog(scenario=scenario.name)
    n_steps = round(scenario.duration / dt)
    if n_steps <= 0:
        return log
    n_ll = sched.ratio(sched.lowlevel_period)
    n_hl = sched.ratio(sched.highlevel_period)
    n_log = sched.ratio(scenario.log_period)
    full = scenario.loop == "full"

    chain = cfg.sensors if scenario.noise else cfg.sensors.noiseless()
    chain = SensorChain(chain.encoder_resolution, chain.cutoff_hz, chain.packet_hz,
                        chain.attitude_std, chain.rate_std, scenario.seed)
    _, att_rng = chain.streams()
    encoders = EncoderReader(chain)
    attitude = AttitudeReader(chain, att_rng)

    gimbal = GimbalController(scenario.gimbal_method if full else scenario.method, p,
                              sched.lowlevel_period, cfg.gimbal_gains,
                              beta_eq=scenario.beta_eq,
                              integral_limit=cfg.gimbal_integral_limit)
    refs = scenario.references

    def ref_value(name, t):
        prof = refs.get(name)
        return (prof.value(t), prof.rate(t)) if prof is not None else (0.0, 0.0)

    th1_0 = ref_value("theta1", 0.0)[0] if "theta1_0" not in scenario.initial else scenario.initial["theta1_0"]
    th2_0 = ref_value("theta2", 0.0)[0] if "theta2_0" not in scenario.initial else scenario.initial["theta2_0"]
    y = [th1_0, th2_0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    pend = None
    if full:
        pend = PendulumController(scenario.method, p, sched.highlevel_period,
                                  scenario.theta1_eq, cfg.Q, cfg.R, cfg.limits)
    # gimbal-only runs keep the pendulum clamped for the whole run
    released = full and scenario.release_time <= 0.0
    n_release = round(scenario.release_time / dt) if full else 0

    # held signals
    enc = encoders(th1_0, th2_0)
    if pend is not None:
        pend.reset(*enc)
    hl_out = (0.0, 0.0)
    g_ref = GimbalReference(0.0, 0.0)
    f_cmd = scenario.gimbal_thrust if scenario.gimbal_thrust is not None else p.hover_thrust
    weight = 0.0
    meas_att = AttitudeMeasurement(0.0, 0.0, 0.0, 0.0)
    tau_ab = (0.0, 0.0)
    rotor_cmd = [f_cmd / 4.0] * 4
    saturated = hl_sat = False
    singular = False
    n_enc = 1
    next_enc = sched.encoder_tick(1)
    lo, hi = cfg.divergence_band
    rhs = plant_rhs(p, rotor, cfg.rotor_tau)
    isfinite = math.isfinite

    for k in range(n_steps + 1):
        t = k * dt
        try:
            if k == next_enc:
                enc = encoders(y[0], y[1])
                n_enc += 1
                next_enc = sched.encoder_tick(n_enc)
            if full and k == n_release and k > 0:
                released = True
                pend.reset(*enc)

            if full and k % n_hl == 0:
                r1, r1d = ref_value("theta1", t)
                r2, r2d = ref_value("theta2", t)
                out = pend(enc[0], enc[1], PendulumReference(r1, r2, r1d, r2d))
                if not released:
                    pend.reset(*enc)
                hl_out = (out.T_Y, out.T_Z)
                hl_sat = out.saturated
                cmd = torque_to_thrust_vector(hl_out, enc[0], p, cfg.policy, cfg.thrust_limit)
                hl_sat = hl_sat or cmd.saturated
                f_cmd, weight = cmd.f, cmd.weight
                if k == 0 or not cfg.gimbal_feedforward:
                    g_ref = GimbalReference(cmd.alpha_d, cmd.beta_d)
                else:
                    # rate of the held command over the last controller period
                    h = sched.highlevel_period
                    g_ref = GimbalReference(
                        cmd.alpha_d, cmd.beta_d,
                        math.remainder(cmd.alpha_d - g_ref.alpha, 2 * math.pi) / h,
                        (cmd.beta_d - g_ref.beta) / h)
                if k == 0:
                    # start with the gimbal at its first command and rotors spun up
                    y[2], y[3] = cmd.alpha_d, cmd.beta_d
            elif not full:
                a, ad = ref_value("alpha", t)
                b, bd = ref_value("beta", t)
                if not scenario.feedforward:
                    ad = bd = 0.0
                g_ref = GimbalReference(a, b, ad, bd)

            if k % n_ll == 0:
                meas_att = AttitudeMeasurement(*attitude(y[2], y[3], y[6], y[7]))
                tau_ab = gimbal(g_ref, meas_att)
                tau_xyz = gimbal_torque_to_body(tau_ab[0], tau_ab[1], meas_att.beta)
                mix = mix_to_rotors(f_cmd, tau_xyz, rotor)
                rotor_cmd = mix.thrusts.tolist()
                saturated = mix.saturated or hl_sat
                if k == 0 or cfg.rotor_tau <= 0.0:
                    y[8:12] = rotor_cmd

            if k % n_log == 0:
                log.append((
                    t,
                    ref_value("theta1", t)[0], ref_value("theta2", t)[0],
                    g_ref.alpha, g_ref.beta,
                    y[0], y[1] % (2.0 * math.pi), y[2], y[3],
                    y[4], y[5], y[6], y[7],
                    enc[0], enc[1] % (2.0 * math.pi), meas_att.alpha, meas_att.beta,
                    hl_out[0], hl_out[1], f_cmd, g_ref.alpha, g_ref.beta,
                    tau_ab[0], tau_ab[1], *y[8:12],
                    float(saturated), float(singular), weight,
                ))
            if k == n_steps:
                break

            tau_d = disturbance_torques(scenario.disturbances, t)
            y, singular = rk4_rhs(rhs, y, rotor_cmd, tau_d, not released, dt)
        except (ArithmeticError, ValueError, PendcopterError) as exc:
            raise SimulationError(k, t, exc) from exc

        # a sum over the state is non-finite iff some entry is
        if not isfinite(sum(y)) or not lo <= y[0] <= hi:
            log.diverged = True
            log.divergence_time = (k + 1) * dt
            break
    return log
