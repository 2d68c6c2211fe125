"""YAML configuration: one file describes a run (plant, rotor, sensor,
controller and scenario sections). Every section is optional; missing keys
take the library defaults.

Scenario section, either a builtin by name::

    scenario: {builtin: regulation-noneq, method: SPL, seed: 3}

or a full definition::

    scenario:
      name: my-step
      duration: 10
      loop: gimbal
      method: PFL
      references:
        alpha:
          - {kind: hold, t0: 0, t1: 6, start: 0, end: 0}
          - {kind: step, t0: 6, t1: 10, start: 0, end: 0.785}
      metrics: {step_channel: alpha, step_time: 6}
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import yaml

from ..allocation import SingularityPolicy
from ..errors import ConfigError
from ..highlevel import HighLevelLimits
from ..kinematics import RotorParams
from ..lowlevel import GimbalGains, PidGains
from ..plant import Disturbance, PlantParams, SensorChain
from ..sim import RateSchedule, SimConfig
from .scenario import MetricSpec, Profile, Scenario, Segment, builtin_scenarios, find_scenario

SECTIONS = ("plant", "rotor", "sensor", "schedule", "controller", "scenario")


def _build(cls, data, where: str, default=None):
    """Instantiate ``cls`` from a mapping; missing keys fall back to ``default``."""
    if data is None:
        return default if default is not None else cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    base = dataclasses.asdict(default) if default is not None else {}
    try:
        return cls(**{**base, **{k: _number(v) for k, v in data.items()}})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _number(v):
    # YAML has no literal for infinity that everyone remembers
    if isinstance(v, str) and v.lower() in ("inf", "+inf", ".inf"):
        return math.inf
    return v


def _pop_keys(data: dict, keys, where: str) -> dict:
    out = {k: data.pop(k) for k in keys if k in data}
    if data:
        raise ConfigError(f"{where}: unknown keys {sorted(data)}")
    return out


def sim_config_from_dict(doc: dict) -> SimConfig:
    """SimConfig from the non-scenario sections of a config document."""
    doc = doc or {}
    plant = _build(PlantParams, doc.get("plant"), "plant")
    rotor_sec = dict(doc.get("rotor") or {})
    rotor_tau = float(rotor_sec.pop("lag", 0.02))
    rotor = _build(RotorParams, rotor_sec, "rotor")
    sensors = _build(SensorChain, doc.get("sensor"), "sensor")
    schedule = _build(RateSchedule, doc.get("schedule"), "schedule")

    ctl = dict(doc.get("controller") or {})
    gimbal = dict(ctl.pop("gimbal", None) or {})
    sing = ctl.pop("singularity", None)
    known = _pop_keys(ctl, ("Q", "R", "integral_limit", "torque_limit", "thrust_limit",
                            "gimbal_feedforward"), "controller")
    g_known = _pop_keys(gimbal, ("alpha", "beta", "integral_limit"), "controller.gimbal")
    dflt = GimbalGains()
    gains = GimbalGains(
        alpha=_build(PidGains, g_known.get("alpha"), "controller.gimbal.alpha", dflt.alpha),
        beta=_build(PidGains, g_known.get("beta"), "controller.gimbal.beta", dflt.beta))
    policy = _build(SingularityPolicy, sing, "controller.singularity")
    base = HighLevelLimits()
    try:
        limits = HighLevelLimits(torque=float(known.get("torque_limit", base.torque)),
                                 integral=float(known.get("integral_limit", base.integral)),
                                 policy=policy)
        Q = tuple(float(q) for q in known.get("Q", SimConfig.Q))
        R = tuple(float(r) for r in known.get("R", SimConfig.R))
        if len(Q) != 6 or len(R) != 2:
            raise ConfigError("controller: Q needs 6 weights and R needs 2")
        return SimConfig(plant=plant, rotor=rotor, rotor_tau=rotor_tau, sensors=sensors,
                         schedule=schedule, gimbal_gains=gains,
                         gimbal_integral_limit=float(g_known.get("integral_limit", 20.0)),
                         Q=Q, R=R, limits=limits, policy=policy,
                         thrust_limit=float(known.get("thrust_limit", 0.6)),
                         gimbal_feedforward=bool(known.get("gimbal_feedforward", True)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"controller: {exc}") from exc


def _profile(segs, where: str) -> Profile:
    if not isinstance(segs, list):
        raise ConfigError(f"{where}: expected a list of segments")
    try:
        return Profile(tuple(Segment(str(s["kind"]), float(s["t0"]), float(s["t1"]),
                                     float(s["start"]), float(s["end"])) for s in segs))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_SCALARS = ("name", "duration", "loop", "method", "noise", "seed", "release_time",
            "log_period", "theta1_eq", "beta_eq", "gimbal_method", "gimbal_thrust",
            "feedforward", "expect_diverged", "family")


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario: expected a mapping")
    data = dict(data)
    if "builtin" in data:
        name = data.pop("builtin")
        method = data.pop("method", None)
        try:
            sc = find_scenario(str(name), method)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"unknown builtin scenario {name!r}") from exc
        overrides = _pop_keys(data, ("noise", "seed", "log_period", "duration"), "scenario")
        if "duration" in overrides:
            raise ConfigError("scenario: a builtin's duration is fixed by its references")
        return dataclasses.replace(sc, **overrides) if overrides else sc
    try:
        refs = {k: _profile(v, f"scenario.references.{k}")
                for k, v in (data.pop("references", None) or {}).items()}
        dists = tuple(Disturbance(**d) for d in (data.pop("disturbances", None) or ()))
        metrics = MetricSpec(**(data.pop("metrics", None) or {}))
        if metrics.rms_window is not None:
            metrics = dataclasses.replace(metrics, rms_window=tuple(metrics.rms_window))
        initial = dict(data.pop("initial", None) or {})
        kw = _pop_keys(data, _SCALARS, "scenario")
        for req in ("name", "duration", "loop", "method"):
            if req not in kw:
                raise ConfigError(f"scenario: missing {req!r}")
        return Scenario(references=refs, disturbances=dists, metrics=metrics,
                        initial=initial, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def load_config(path) -> tuple[SimConfig, Scenario | None]:
    """Parse a YAML file into (SimConfig, Scenario or None)."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    cfg = sim_config_from_dict(doc)
    sc = scenario_from_dict(doc["scenario"]) if doc.get("scenario") is not None else None
    return cfg, sc


# ---------------------------------------------------------------------------
# export

def scenario_to_dict(sc: Scenario) -> dict:
    out = {k: getattr(sc, k) for k in _SCALARS}
    out["references"] = {name: [{"kind": s.kind, "t0": s.t0, "t1": s.t1,
                                 "start": s.start, "end": s.end} for s in prof.segments]
                         for name, prof in sc.references.items()}
    out["disturbances"] = [dataclasses.asdict(d) for d in sc.disturbances]
    m = dataclasses.asdict(sc.metrics)
    if m["rms_window"] is not None:
        m["rms_window"] = list(m["rms_window"])
    out["metrics"] = m
    out["initial"] = dict(sc.initial)
    return out


def sim_config_to_dict(cfg: SimConfig) -> dict:
    def fields(obj):
        return dataclasses.asdict(obj)

    rotor = fields(cfg.rotor)
    rotor["lag"] = cfg.rotor_tau
    return {
        "plant": fields(cfg.plant),
        "rotor": rotor,
        "sensor": {k: v for k, v in fields(cfg.sensors).items() if k != "seed"},
        "schedule": fields(cfg.schedule),
        "controller": {
            "Q": list(cfg.Q), "R": list(cfg.R),
            "integral_limit": cfg.limits.integral,
            "torque_limit": cfg.limits.torque,
            "thrust_limit": cfg.thrust_limit,
            "gimbal_feedforward": cfg.gimbal_feedforward,
            "singularity": fields(cfg.policy),
            "gimbal": {"alpha": fields(cfg.gimbal_gains.alpha),
                       "beta": fields(cfg.gimbal_gains.beta),
                       "integral_limit": cfg.gimbal_integral_limit},
        },
    }


def dump_config(cfg: SimConfig, sc: Scenario | None = None) -> str:
    doc = sim_config_to_dict(cfg)
    if sc is not None:
        doc["scenario"] = scenario_to_dict(sc)
    return yaml.safe_dump(doc, sort_keys=False)


def export_builtins(directory, cfg: SimConfig | None = None) -> list[Path]:
    """Write every builtin scenario, with the full default config, as YAML."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cfg = cfg or SimConfig()
    paths = []
    for sc in builtin_scenarios():
        path = directory / f"{sc.name}.yaml"
        path.write_text(dump_config(cfg, sc), encoding="utf-8")
        paths.append(path)
    return paths
