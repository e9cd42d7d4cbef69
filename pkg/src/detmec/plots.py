"""Figure rendering for report outputs.

Each helper takes already-aggregated rows (the same ones written to CSV) and
renders a PNG next to them. Uses the Agg backend so it works headless.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .simulate import PacketTrace

US = 1_000.0


def plot_latency_series(traces: Sequence[PacketTrace], path: str | Path, title: str = "") -> None:
    """Per-demand end-to-end latency over hypercycles."""
    series: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for tr in traces:
        series[tr.demand_id].append((tr.hypercycle, tr.latency_ns))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for demand_id in sorted(series):
        pts = sorted(series[demand_id])
        ax.plot([p[0] for p in pts], [p[1] / US for p in pts], lw=0.9, label=demand_id)
    ax.set_xlabel("hypercycle")
    ax.set_ylabel("latency [us]")
    if title:
        ax.set_title(title)
    if len(series) <= 12:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_jitter_comparison(rows: Sequence[tuple], path: str | Path) -> None:
    """Max jitter vs background utilization, one line per mode.

    Rows: (mode, utilization, max_jitter_ns).
    """
    series: dict[str, list[tuple[float, int]]] = defaultdict(list)
    for mode, util, jitter in rows:
        series[mode].append((float(util), int(jitter)))
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for mode in sorted(series):
        pts = sorted(series[mode])
        ax.plot(
            [p[0] for p in pts],
            [p[1] / US for p in pts],
            marker="o",
            label=mode,
        )
    ax.set_xlabel("background utilization")
    ax.set_ylabel("max jitter [us]")
    ax.set_yscale("symlog")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(rows: Sequence[tuple], path: str | Path, param: str = "H") -> None:
    """Accepted-demand counts across a swept parameter, one line per solver.

    Rows: (param_value, solver, objective).
    """
    series: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for value, solver, objective in rows:
        series[solver].append((int(value), int(objective)))
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for solver in sorted(series):
        pts = sorted(series[solver])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=solver)
    ax.set_xlabel(param)
    ax.set_ylabel("admitted demands")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
