"""Step-response and tracking metrics computed from a trajectory log.

Crossing times are linearly interpolated between log samples, so the
results do not snap to the logging grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import MetricUndefined

SETTLING_BAND = 0.02
DIVERGENCE_BAND = (-math.pi / 4, 5 * math.pi / 4)


@dataclass(frozen=True)
class Metrics:
    channel: str
    rms: float = math.nan
    rise_time: float = math.nan
    overshoot: float = math.nan
    settling_time: float = math.nan
    verdict: str = "stable"
    divergence_time: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def _first_crossing(t, y, level):
    """Interpolated first time y reaches ``level`` (y assumed to start below)."""
    idx = np.nonzero(y >= level)[0]
    if len(idx) == 0:
        return math.nan
    i = idx[0]
    if i == 0:
        return float(t[0])
    y0, y1 = y[i - 1], y[i]
    return float(t[i - 1] + (level - y0) / (y1 - y0) * (t[i] - t[i - 1]))


def rise_time(t, y, start: float, target: float, lo: float = 0.1, hi: float = 0.9) -> float:
    """Time to go from ``lo`` to ``hi`` of the way from start to target."""
    step = target - start
    if step == 0:
        raise MetricUndefined("rise time of a zero step")
    s = (np.asarray(y, float) - start) / step
    t = np.asarray(t, float)
    return _first_crossing(t, s, hi) - _first_crossing(t, s, lo)


def overshoot(y, start: float, target: float) -> float:
    """Peak excursion past the target in percent of the step, floored at 0."""
    step = target - start
    if step == 0:
        raise MetricUndefined("overshoot of a zero step")
    peak = np.max((np.asarray(y, float) - target) / step)
    return max(0.0, float(peak) * 100.0)


def settling_time(t, y, start: float, target: float, band: float = SETTLING_BAND) -> float:
    """Last time the response leaves the +-band (fraction of the step) around target.

    Measured from ``t[0]``; ``inf`` when the response is outside the band at
    the end of the record.
    """
    step = target - start
    if step == 0:
        raise MetricUndefined("settling time of a zero step")
    t = np.asarray(t, float)
    dev = np.abs((np.asarray(y, float) - target) / step) - band
    outside = np.nonzero(dev > 0)[0]
    if len(outside) == 0:
        return 0.0
    i = outside[-1]
    if i == len(t) - 1:
        return math.inf
    d0, d1 = dev[i], dev[i + 1]
    tc = t[i] + d0 / (d0 - d1) * (t[i + 1] - t[i])
    return float(tc - t[0])


def rms(t, err, window=None) -> float:
    t = np.asarray(t, float)
    err = np.asarray(err, float)
    if window is not None:
        m = (t >= window[0]) & (t <= window[1])
        err = err[m]
    if len(err) == 0:
        raise MetricUndefined("empty RMS window")
    return float(np.sqrt(np.mean(err * err)))


def angle_error(y, ref) -> np.ndarray:
    """Wrapped difference y - ref in (-pi, pi]."""
    d = np.asarray(y, float) - np.asarray(ref, float)
    return np.remainder(d + math.pi, 2 * math.pi) - math.pi


def divergence(t, theta1, band=DIVERGENCE_BAND) -> float:
    """First time theta1 leaves ``band`` or turns non-finite; nan if never."""
    theta1 = np.asarray(theta1, float)
    bad = ~np.isfinite(theta1) | (theta1 < band[0]) | (theta1 > band[1])
    idx = np.nonzero(bad)[0]
    return float(np.asarray(t)[idx[0]]) if len(idx) else math.nan


def step_metrics(log, channel: str, step_time: float, start: float, target: float) -> Metrics:
    t = log["t"]
    y = log[channel]
    m = t >= step_time
    if not np.any(m):
        raise MetricUndefined(f"log ends before the step at t = {step_time}")
    ts, ys = t[m], y[m]
    return Metrics(
        channel=channel,
        rise_time=rise_time(ts, ys, start, target),
        overshoot=overshoot(ys, start, target),
        settling_time=settling_time(ts, ys, start, target),
    )


def compute_metrics(log, scenario) -> dict:
    """Metrics per channel for ``scenario``'s log.

    Gimbal scenarios report step metrics on the stepped channel; full-loop
    scenarios report RMS tracking error of theta1 and theta2 over the
    scenario's window. A diverged run reports RMS over the samples it has.
    """
    if len(log) == 0:
        raise MetricUndefined("empty log")
    ms = scenario.metrics
    t = log["t"]
    div_t = log.divergence_time if log.diverged else divergence(t, log["theta1"])
    verdict = "diverged" if log.diverged or not math.isnan(div_t) else "stable"
    out = {}
    if scenario.loop == "gimbal":
        ch = ms.step_channel
        if ch is None:
            raise MetricUndefined(f"{scenario.name} defines no step")
        prof = scenario.references[ch]
        steps = [s for s in prof.steps() if ms.step_time is None or s[0] == ms.step_time]
        if not steps:
            raise MetricUndefined(f"{scenario.name} has no step on {ch}")
        t0, before, after = steps[0]
        m = step_metrics(log, ch, t0, before, after)
        out[ch] = Metrics(**{**m.as_dict(), "verdict": verdict, "divergence_time": div_t})
        return out
    window = ms.rms_window
    for ch in ("theta1", "theta2"):
        err = angle_error(log[ch], log[f"{ch}_ref"])
        out[ch] = Metrics(channel=ch, rms=rms(t, err, window), verdict=verdict,
                          divergence_time=div_t)
    return out


def peak_deviation(log, channel: str, t0: float, t1: float) -> float:
    """Largest |channel - ref| on [t0, t1)."""
    t = log["t"]
    m = (t >= t0) & (t < t1)
    return float(np.max(np.abs(angle_error(log[channel][m], log[f"{channel}_ref"][m]))))


def recovery_time(log, channel: str, t0: float, t1: float, band: float = SETTLING_BAND) -> float:
    """Time after ``t0`` at which |error| re-enters band * peak for good (before t1).

    ``inf`` if the error is still outside the band at ``t1``.
    """
    t = log["t"]
    m = (t >= t0) & (t < t1)
    e = np.abs(angle_error(log[channel][m], log[f"{channel}_ref"][m]))
    tol = band * float(np.max(e))
    outside = np.nonzero(e > tol)[0]
    if len(outside) == 0:
        return 0.0
    i = outside[-1]
    if i == len(e) - 1:
        return math.inf
    return float(t[m][i + 1] - t0)


def disturbance_response(log, scenario) -> dict:
    """Per disturbed channel: (peak deviation, recovery time).

    Each disturbance is judged on the interval from its onset to the next
    onset (or the end of the log).
    """
    starts = sorted({d.start for d in scenario.disturbances})
    t_end = float(log["t"][-1]) + 1.0
    out = {}
    for d in scenario.disturbances:
        later = [s for s in starts if s > d.start]
        t1 = later[0] if later else t_end
        out[d.channel] = (peak_deviation(log, d.channel, d.start, t1),
                          recovery_time(log, d.channel, d.start, t1))
    return out
