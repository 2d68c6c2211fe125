"""Command-line entry point.

Exit codes: 0 success, 1 a scenario diverged when it was not expected to
(or the simulation raised), 2 bad configuration or unknown scenario.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import ConfigError, MetricUndefined, SimulationError
from ..highlevel import METHODS, build_model, synthesize_lqi
from ..sim import SimConfig, run
from .config import export_builtins, load_config
from .metrics import compute_metrics, disturbance_response
from .output import DEFAULT_PLOT, plot_svg, read_csv, write_csv
from .scenario import builtin_scenarios, find_scenario

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG = 0, 1, 2


def _resolve(args) -> tuple[SimConfig, object]:
    cfg, sc = SimConfig(), None
    if getattr(args, "config", None):
        cfg, sc = load_config(args.config)
    name = getattr(args, "scenario", None)
    if name:
        path = Path(name)
        if path.suffix in (".yaml", ".yml"):
            cfg2, sc = load_config(path)
            if not getattr(args, "config", None):
                cfg = cfg2
            if sc is None:
                raise ConfigError(f"{path} has no scenario section")
        else:
            try:
                sc = find_scenario(name)
            except KeyError:
                raise ConfigError(f"unknown scenario {name!r}") from None
    if sc is None:
        raise ConfigError("no scenario given")
    if getattr(args, "method", None):
        try:
            sc = sc.with_method(args.method)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if getattr(args, "no_noise", False):
        sc = dataclasses.replace(sc, noise=False)
    if getattr(args, "seed", None) is not None:
        sc = dataclasses.replace(sc, seed=args.seed)
    return cfg, sc


def _fmt(v, digits=4):
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return f"{v:.{digits}g}"


def _summary(log, sc) -> dict:
    out = {"scenario": sc.name, "method": sc.method, "diverged": bool(log.diverged),
           "expect_diverged": sc.expect_diverged, "samples": len(log)}
    try:
        out["metrics"] = {k: m.as_dict() for k, m in compute_metrics(log, sc).items()}
    except MetricUndefined as exc:
        out["metrics"] = {"error": str(exc)}
    if sc.disturbances and len(log):
        out["disturbance"] = {ch: {"peak": pk, "recovery_time": rt}
                              for ch, (pk, rt) in disturbance_response(log, sc).items()}
    return out


def _print_summary(s: dict, stream=None):
    stream = stream or sys.stdout
    print(f"{s['scenario']}: {'diverged' if s['diverged'] else 'stable'}"
          f" ({s['samples']} samples)", file=stream)
    for ch, m in s["metrics"].items():
        if ch == "error":
            print(f"  metrics undefined: {m}", file=stream)
            continue
        parts = [f"{k}={_fmt(m[k])}" for k in ("rms", "rise_time", "overshoot",
                                             "settling_time", "divergence_time")
                 if not (isinstance(m[k], float) and math.isnan(m[k]))]
        print(f"  {ch}: {m['verdict']} " + " ".join(parts), file=stream)
    for ch, d in s.get("disturbance", {}).items():
        print(f"  {ch} disturbance: peak={_fmt(d['peak'])} recovery={_fmt(d['recovery_time'])}",
              file=stream)


def cmd_run(args) -> int:
    cfg, sc = _resolve(args)
    try:
        log = run(sc, cfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    summary = _summary(log, sc)
    _print_summary(summary)
    if args.out:
        out = Path(args.out)
        write_csv(log, out / f"{sc.name}.csv")
        (out / f"{sc.name}.metrics.json").write_text(json.dumps(summary, indent=2) + "\n")
        print(f"wrote {out / (sc.name + '.csv')}")
    if summary["diverged"] and not sc.expect_diverged:
        return EXIT_DIVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# suite

def _run_one(job):
    sc, cfg = job
    try:
        log = run(sc, cfg)
    except SimulationError as exc:
        return {"scenario": sc.name, "method": sc.method, "error": str(exc),
                "diverged": True, "expect_diverged": sc.expect_diverged, "metrics": {}}
    return _summary(log, sc)


def run_suite(cfg: SimConfig | None = None, jobs: int = 1, scenarios=None) -> list[dict]:
    """Run scenarios (default: every builtin) and return summaries sorted by name."""
    cfg = cfg or SimConfig()
    scenarios = sorted(scenarios or builtin_scenarios(), key=lambda s: s.name)
    work = [(sc, cfg) for sc in scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_one, work))
    return [_run_one(w) for w in work]


def _table(title, header, rows) -> str:
    lines = [f"### {title}", "", "| " + " | ".join(header) + " |",
             "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(_fmt(c) for c in r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def suite_tables(results: list[dict]) -> str:
    by = {r["scenario"]: r for r in results}

    def m(name, ch, key):
        r = by.get(name)
        if r is None or ch not in r.get("metrics", {}):
            return None
        return r["metrics"][ch][key]

    def verdict(name):
        r = by.get(name)
        if r is None:
            return None
        if "error" in r:
            return "error"
        return "diverged" if r["diverged"] else "stable"

    out = []
    steps = sorted({int(n.split("-")[2]) for n in by if n.startswith("gimbal-step-")})
    for deg in steps:
        rows = [(meth, m(f"gimbal-step-{deg}-{meth}", "alpha", "rise_time"),
                 m(f"gimbal-step-{deg}-{meth}", "alpha", "overshoot"),
                 m(f"gimbal-step-{deg}-{meth}", "alpha", "settling_time")) for meth in METHODS]
        out.append(_table(f"Gimbal alpha step {deg} deg (no noise)",
                          ("method", "rise [s]", "overshoot [%]", "settling [s]"), rows))
    rows = []
    for fam in ("regulation-eq", "regulation-noneq"):
        for meth in METHODS:
            n = f"{fam}-{meth}"
            rows.append((fam, meth, m(n, "theta1", "rms"), m(n, "theta2", "rms"), verdict(n)))
    out.append(_table("Regulation", ("scenario", "method", "theta1 RMS [rad]",
                                     "theta2 RMS [rad]", "verdict"), rows))
    rows = []
    for n in sorted(x for x in by if x.startswith("disturbance-")):
        d = by[n].get("disturbance", {})
        rows.append((n, *(d.get(ch, {}).get(k) for ch in ("theta1", "theta2")
                          for k in ("peak", "recovery_time")), verdict(n)))
    out.append(_table("Disturbance recovery", ("scenario", "theta1 peak", "theta1 recovery [s]",
                                               "theta2 peak", "theta2 recovery [s]",
                                               "verdict"), rows))
    for fam, title in (("tracking-combined", "Combined tracking"),
                       ("tracking-inverted", "Inverted tracking")):
        rows = [(meth, m(f"{fam}-{meth}", "theta1", "rms"), m(f"{fam}-{meth}", "theta2", "rms"),
                 verdict(f"{fam}-{meth}"), m(f"{fam}-{meth}", "theta1", "divergence_time"))
                for meth in METHODS]
        out.append(_table(title, ("method", "theta1 RMS [rad]", "theta2 RMS [rad]",
                                  "verdict", "diverged at [s]"), rows))
    return "\n".join(out)


def cmd_suite(args) -> int:
    cfg = load_config(args.config)[0] if args.config else SimConfig()
    results = run_suite(cfg, args.jobs)
    text = suite_tables(results)
    print(text)
    unexpected = [r["scenario"] for r in results if r["diverged"] and not r["expect_diverged"]]
    missing = [r["scenario"] for r in results if r["expect_diverged"] and not r["diverged"]]
    if missing:
        print("expected divergence not observed: " + ", ".join(missing))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite.md").write_text(text)
        (out / "suite.json").write_text(json.dumps(results, indent=2) + "\n")
    if unexpected:
        print("diverged unexpectedly: " + ", ".join(unexpected), file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_gains(args) -> int:
    cfg = load_config(args.config)[0] if args.config else SimConfig()
    methods = [args.method.upper()] if args.method else list(METHODS)
    np.set_printoptions(precision=6, suppress=False, linewidth=120)
    for meth in methods:
        try:
            model = build_model(meth, cfg.plant, args.theta1_eq)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        gain = synthesize_lqi(model, cfg.Q, cfg.R)
        poles = np.sort_complex(gain.closed_loop_poles(model))
        print(f"{meth} (theta1_eq = {args.theta1_eq:g})")
        print("K =")
        print(gain.K)
        print(f"CARE residual = {gain.residual:.3e}")
        print("closed-loop poles = " + ", ".join(f"{p:.4g}" for p in poles))
        print()
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        data = read_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc}") from exc
    groups = [tuple(args.channels)] if args.channels else DEFAULT_PLOT
    out = Path(args.out) if args.out else Path(args.csv).with_suffix(".svg")
    try:
        plot_svg(data, out, groups, title=Path(args.csv).stem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"wrote {out}")
    return EXIT_OK


def cmd_export(args) -> int:
    for p in export_builtins(args.dir):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pendcopter",
                                 description="Gimbal-copter spherical pendulum benchmark.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("scenario", help="builtin name (family or full) or a YAML file")
    p.add_argument("--method", help="SPL, SFL or PFL")
    p.add_argument("--no-noise", action="store_true", help="ideal sensors")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="YAML file with plant/controller settings")
    p.add_argument("--out", help="directory for the CSV and metrics JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="run every builtin scenario and tabulate")
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("gains", help="print LQI gains and CARE residuals")
    p.add_argument("--method")
    p.add_argument("--theta1-eq", type=float, default=0.0)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("plot", help="SVG plot of a logged CSV")
    p.add_argument("csv")
    p.add_argument("--out")
    p.add_argument("--channels", nargs="+")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("export", help="write builtin scenarios as YAML files")
    p.add_argument("dir")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
