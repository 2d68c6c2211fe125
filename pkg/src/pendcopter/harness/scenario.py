"""Reference profiles and the builtin scenario catalogue."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

from ..highlevel import METHODS, check_method
from ..plant import Disturbance

SEGMENT_KINDS = ("hold", "step", "ramp", "blend")


@dataclass(frozen=True)
class Segment:
    """One piece of a reference on [t0, t1).

    ``hold`` keeps ``start``; ``step`` jumps to ``end`` at t0; ``ramp`` is
    linear from ``start`` to ``end``; ``blend`` is a half-cosine between them.
    """

    kind: str
    t0: float
    t1: float
    start: float
    end: float

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not self.t1 > self.t0:
            raise ValueError("segment must have positive length")
        if self.kind == "hold" and self.start != self.end:
            raise ValueError("hold segment must keep its value")

    def value(self, t: float) -> float:
        if self.kind == "hold":
            return self.start
        if self.kind == "step":
            return self.end
        s = (t - self.t0) / (self.t1 - self.t0)
        s = min(max(s, 0.0), 1.0)
        if self.kind == "ramp":
            return self.start + (self.end - self.start) * s
        return self.start + (self.end - self.start) * 0.5 * (1.0 - math.cos(math.pi * s))

    def rate(self, t: float) -> float:
        if self.kind in ("hold", "step") or not self.t0 <= t < self.t1:
            return 0.0
        T = self.t1 - self.t0
        if self.kind == "ramp":
            return (self.end - self.start) / T
        s = (t - self.t0) / T
        return (self.end - self.start) * 0.5 * math.pi / T * math.sin(math.pi * s)


@dataclass(frozen=True)
class Profile:
    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("profile needs at least one segment")
        if segs[0].t0 != 0.0:
            raise ValueError("profile must start at t = 0")
        for a, b in zip(segs, segs[1:]):
            if not math.isclose(a.t1, b.t0, abs_tol=1e-12):
                raise ValueError("segments must be contiguous and non-overlapping")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_starts", [s.t0 for s in segs])

    @property
    def duration(self) -> float:
        return self.segments[-1].t1

    def segment_at(self, t: float) -> Segment:
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[min(max(i, 0), len(self.segments) - 1)]

    def value(self, t: float) -> float:
        seg = self.segment_at(t)
        return seg.value(t) if t < seg.t1 else seg.value(seg.t1)

    def rate(self, t: float) -> float:
        return self.segment_at(t).rate(t)

    def steps(self):
        """(time, value before, value after) for every step segment."""
        out = []
        for i, s in enumerate(self.segments):
            if s.kind == "step":
                before = self.segments[i - 1].value(s.t0) if i else s.start
                out.append((s.t0, before, s.end))
        return out

    @classmethod
    def build(cls, initial: float, changes, duration: float) -> "Profile":
        """Profile from an initial value and (kind, t0, t1, target) changes.

        Gaps are filled with holds. A step's t1 is where its hold ends, so
        a step may simply be given as (\"step\", t0, t0_next, target).
        """
        segs = []
        t, v = 0.0, float(initial)
        for kind, t0, t1, target in sorted(changes, key=lambda c: c[1]):
            if t0 > t:
                segs.append(Segment("hold", t, t0, v, v))
            segs.append(Segment(kind, t0, t1, v, float(target)))
            t, v = t1, float(target)
        if duration > t:
            segs.append(Segment("hold", t, duration, v, v))
        return cls(tuple(segs))

    @classmethod
    def constant(cls, value: float, duration: float) -> "Profile":
        return cls((Segment("hold", 0.0, duration, value, value),))


@dataclass(frozen=True)
class MetricSpec:
    """What to measure: a step on one channel, or tracking RMS over a window."""

    step_channel: str | None = None
    step_time: float | None = None
    rms_window: tuple | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    loop: str                       # "gimbal" | "full"
    method: str
    references: dict
    disturbances: tuple = ()
    noise: bool = True
    seed: int = 0
    release_time: float = 0.0
    log_period: float = 0.01
    theta1_eq: float = 0.0
    beta_eq: float = 0.0
    gimbal_method: str = "PFL"
    gimbal_thrust: float | None = None
    feedforward: bool = True
    expect_diverged: bool = False
    initial: dict = field(default_factory=dict)
    metrics: MetricSpec = MetricSpec()
    family: str = ""

    def __post_init__(self):
        if self.loop not in ("gimbal", "full"):
            raise ValueError(f"loop must be 'gimbal' or 'full', got {self.loop!r}")
        object.__setattr__(self, "method", check_method(self.method))
        object.__setattr__(self, "gimbal_method", check_method(self.gimbal_method))
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if not self.log_period > 0:
            raise ValueError("log period must be positive")
        wanted = ("theta1", "theta2") if self.loop == "full" else ("alpha", "beta")
        for name, prof in self.references.items():
            if name not in wanted:
                raise ValueError(f"reference {name!r} does not belong to a {self.loop} loop")
            if not math.isclose(prof.duration, self.duration, abs_tol=1e-9) and self.duration > 0:
                raise ValueError(f"reference {name!r} does not cover [0, {self.duration}]")

    def with_method(self, method: str) -> "Scenario":
        method = check_method(method)
        base = self.family or self.name
        return replace(self, method=method, name=f"{base}-{method}",
                       expect_diverged=_expect_diverged(base, method))


def _expect_diverged(family: str, method: str) -> bool:
    return method == "SPL" and family in ("regulation-noneq", "tracking-inverted")


# ---------------------------------------------------------------------------
# builtin catalogue

GIMBAL_STEPS_DEG = (15, 45, 70)
GIMBAL_STEP_TIME = 6.0
GIMBAL_DURATION = 10.0
BETA_RAMP = (1.0, 4.0)          # s, beta 0 -> 45 deg
REGULATION_DURATION = 20.0
RELEASE_TIME = 5.0
IMPULSE = 0.1                   # N*m
STEP_DISTURBANCE = 0.02         # N*m
DISTURBANCE_TIMES = (5.0, 15.0)
BLEND_DURATION = 3.0
COMBINED_DURATION = 90.0
COMBINED_TIMES = (10.0, 35.0, 60.0)
INVERTED_DURATION = 60.0


def gimbal_step(deg: float, method: str) -> Scenario:
    d = GIMBAL_DURATION
    beta = Profile.build(0.0, [("ramp", *BETA_RAMP, math.radians(45.0))], d)
    alpha = Profile.build(0.0, [("step", GIMBAL_STEP_TIME, d, math.radians(deg))], d)
    return Scenario(
        name=f"gimbal-step-{deg:g}-{method}", family=f"gimbal-step-{deg:g}",
        duration=d, loop="gimbal", method=method,
        references={"alpha": alpha, "beta": beta},
        noise=False, log_period=0.001, beta_eq=0.0,
        metrics=MetricSpec(step_channel="alpha", step_time=GIMBAL_STEP_TIME))


def regulation(theta1_ref: float, method: str, family: str) -> Scenario:
    d = REGULATION_DURATION
    return Scenario(
        name=f"{family}-{method}", family=family, duration=d, loop="full", method=method,
        references={"theta1": Profile.constant(theta1_ref, d),
                    "theta2": Profile.constant(0.0, d)},
        release_time=RELEASE_TIME, expect_diverged=_expect_diverged(family, method),
        metrics=MetricSpec(rms_window=(RELEASE_TIME, d)))


def disturbance(shape: str, method: str = "SPL", times=DISTURBANCE_TIMES,
                duration: float = REGULATION_DURATION) -> Scenario:
    """Equilibrium hold with equal disturbances on theta1 then theta2.

    ``times`` and ``duration`` default to the builtin timing; longer
    variants give slow integral recovery room to finish.
    """
    d = duration
    mag = IMPULSE if shape == "impulse" else STEP_DISTURBANCE
    dists = (Disturbance("theta1", shape, mag, times[0]),
             Disturbance("theta2", shape, mag, times[1]))
    family = f"disturbance-{shape}"
    name = f"{family}-{method}"
    if tuple(times) != DISTURBANCE_TIMES or duration != REGULATION_DURATION:
        name = f"{family}-{d:g}s-{method}"
    return Scenario(
        name=name, family=family, duration=d, loop="full", method=method,
        references={"theta1": Profile.constant(0.0, d), "theta2": Profile.constant(0.0, d)},
        disturbances=dists, metrics=MetricSpec(rms_window=(0.0, d)))


def combined_tracking(method: str, blend: float = BLEND_DURATION) -> Scenario:
    d = COMBINED_DURATION
    t = COMBINED_TIMES
    th1 = (math.pi / 6, math.pi / 4, 0.0)
    th2 = (math.pi / 2, math.pi / 3, 0.0)
    theta1 = Profile.build(0.0, [("blend", ti, ti + blend, v) for ti, v in zip(t, th1)], d)
    theta2 = Profile.build(0.0, [("blend", ti, ti + blend, v) for ti, v in zip(t, th2)], d)
    return Scenario(
        name=f"tracking-combined-{method}", family="tracking-combined", duration=d,
        loop="full", method=method, references={"theta1": theta1, "theta2": theta2},
        metrics=MetricSpec(rms_window=(t[0], d)))


def inverted_tracking(method: str) -> Scenario:
    d = INVERTED_DURATION
    theta1 = Profile.build(0.0, [("blend", 10.0, 30.0, math.pi / 4),
                                 ("blend", 30.0, 50.0, math.pi / 2)], d)
    return Scenario(
        name=f"tracking-inverted-{method}", family="tracking-inverted", duration=d,
        loop="full", method=method,
        references={"theta1": theta1, "theta2": Profile.constant(0.0, d)},
        expect_diverged=_expect_diverged("tracking-inverted", method),
        metrics=MetricSpec(rms_window=(10.0, d)))


def builtin_scenarios() -> list[Scenario]:
    out = [gimbal_step(deg, m) for deg in GIMBAL_STEPS_DEG for m in METHODS]
    out += [regulation(0.0, m, "regulation-eq") for m in METHODS]
    out += [regulation(math.pi / 6, m, "regulation-noneq") for m in METHODS]
    out += [disturbance("impulse"), disturbance("step")]
    out += [combined_tracking(m) for m in METHODS]
    out += [inverted_tracking(m) for m in METHODS]
    return out


def find_scenario(name: str, method: str | None = None) -> Scenario:
    """Look up a builtin by full name, or by family name plus ``method``."""
    table = {s.name.lower(): s for s in builtin_scenarios()}
    families = {}
    for s in table.values():
        families.setdefault(s.family.lower(), []).append(s)
    key = name.lower()
    if key in table:
        sc = table[key]
        return sc.with_method(method) if method else sc
    if key in families:
        base = families[key][0]
        return base.with_method(method or "PFL")
    raise KeyError(name)
