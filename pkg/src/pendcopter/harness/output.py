"""CSV and SVG emission for trajectory logs."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..sim import LOG_COLUMNS, TrajectoryLog

DEFAULT_PLOT = (("theta1", "theta1_ref"), ("theta2", "theta2_ref"),
                ("alpha", "alpha_ref"), ("beta", "beta_ref"))


def write_csv(log: TrajectoryLog, path) -> Path:
    """UTF-8 CSV, header row, columns in the fixed log order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in zip(*(log.columns[c] for c in LOG_COLUMNS)):
            w.writerow(repr(float(v)) for v in row)
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def plot_svg(data: dict, path, groups=DEFAULT_PLOT, title: str = "") -> Path:
    """One panel per channel group against time, written as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = [tuple(c for c in g if c in data) for g in groups]
    groups = [g for g in groups if g]
    if not groups:
        raise ValueError("none of the requested channels are in the data")
    fig, axes = plt.subplots(len(groups), 1, sharex=True, squeeze=False,
                             figsize=(8, 2.2 * len(groups)))
    t = data["t"]
    for ax, group in zip(axes[:, 0], groups):
        for name in group:
            style = "--" if name.endswith("_ref") else "-"
            ax.plot(t, data[name], style, label=name, linewidth=1.0)
        ax.legend(loc="upper right", fontsize="small")
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("t [s]")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
