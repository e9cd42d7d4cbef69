"""Pipeline glue: schedule, simulate, compare, and sweep entry points.

The CLI is a thin argument parser over these functions, and the acceptance
tests call them directly, so everything here returns plain data and leaves
printing to the caller. Report-producing functions write their delimited
output and render a PNG next to it.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import plots, results
from .scheduler import (
    OracleLimits,
    SchedulePlan,
    TabuConfig,
    brute_force_oracle,
    solve_baseline,
    solve_tabu,
    validate_plan,
)
from .scenario import Scenario
from .simulate import BackgroundTraffic, run_best_effort, run_deterministic, trace_stats

SOLVERS = ("tabu", "spf", "noshape", "oracle")


def run_schedule(
    scenario: Scenario,
    solver: str = "tabu",
    max_hops: int | None = None,
    warm_start: SchedulePlan | None = None,
    oracle_limits: OracleLimits | None = None,
) -> SchedulePlan:
    hops = scenario.max_hops if max_hops is None else max_hops
    args = (scenario.demands, scenario.graph, scenario.grid, scenario.timing, scenario.clocks, hops)
    if solver == "tabu":
        cfg = TabuConfig(seed=scenario.seeds.get("solver", 0))
        return solve_tabu(*args, cfg=cfg, warm_start=warm_start)
    if solver in ("spf", "noshape"):
        return solve_baseline(solver, *args)
    if solver == "oracle":
        limits = oracle_limits if oracle_limits is not None else OracleLimits()
        return brute_force_oracle(*args, limits=limits)
    raise ValueError(f"unknown solver {solver!r}")


def check_plan(scenario: Scenario, plan: SchedulePlan, max_hops: int | None = None):
    hops = scenario.max_hops if max_hops is None else max_hops
    return validate_plan(
        plan,
        scenario.demands,
        scenario.graph,
        scenario.grid,
        scenario.timing,
        scenario.clocks,
        hops,
    )


def run_simulation(
    scenario: Scenario,
    plan: SchedulePlan,
    mode: str = "det",
    hypercycles: int = 100,
    seed: int | None = None,
    utilization: float | None = None,
):
    """Returns (traces, stats) for the requested mode."""
    sim_seed = scenario.seeds.get("traffic", 0) if seed is None else seed
    common = (plan, scenario.demands, scenario.graph, scenario.grid, scenario.timing, scenario.clocks)
    if mode == "det":
        traces = run_deterministic(*common, hypercycles=hypercycles, seed=sim_seed)
    elif mode == "besteffort":
        background = scenario.background
        if utilization is not None:
            background = replace(background, utilization=utilization)
        traces = run_best_effort(
            *common, background=background, hypercycles=hypercycles, seed=sim_seed
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return traces, trace_stats(traces, scenario.demands)


def run_compare(
    scenario: Scenario,
    plan: SchedulePlan,
    outdir: str | Path,
    hypercycles: int = 100,
    utilizations: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
    seed: int | None = None,
) -> list[tuple]:
    """Deterministic vs best-effort jitter under rising background load.

    Writes compare.csv, per-mode trace CSVs, a summary JSON, and a rendered
    figure into outdir. Returns the comparison rows.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[tuple] = []

    det_traces, det_stats = run_simulation(
        scenario, plan, "det", hypercycles=hypercycles, seed=seed
    )
    results.write_traces_csv(det_traces, out / "traces_det.csv")
    for util in utilizations:
        rows.append(("det", util, det_stats["overall"]["max_jitter_ns"]))

    be_stats_by_util = {}
    for util in utilizations:
        be_traces, be_stats = run_simulation(
            scenario, plan, "besteffort", hypercycles=hypercycles, seed=seed, utilization=util
        )
        results.write_traces_csv(be_traces, out / f"traces_be_u{int(util * 100):02d}.csv")
        rows.append(("besteffort", util, be_stats["overall"]["max_jitter_ns"]))
        be_stats_by_util[str(util)] = be_stats

    results.write_csv(out / "compare.csv", ("mode", "utilization", "max_jitter_ns"), rows)
    plots.plot_jitter_comparison(rows, out / "compare.png")
    plots.plot_latency_series(det_traces, out / "latency_det.png", title="deterministic mode")
    results.write_summary_json(
        out / "summary.json",
        {
            "config": results.config_hash(scenario, {"hypercycles": hypercycles}),
            "scenario": scenario.name,
            "deterministic": det_stats,
            "besteffort": be_stats_by_util,
        },
    )
    return rows


def parse_sweep_range(text: str) -> list[int]:
    lo, _, hi = text.partition("..")
    start, stop = int(lo), int(hi)
    if stop < start:
        raise ValueError(f"empty range {text!r}")
    return list(range(start, stop + 1))


def run_sweep(
    scenario: Scenario,
    param: str,
    values: Sequence[int],
    outdir: str | Path,
    solvers: Sequence[str] = ("tabu", "spf", "noshape"),
) -> list[tuple]:
    """Admitted demands vs a swept parameter for each solver.

    param "H" sweeps the hop bound (tabu warm-starts from the previous
    point); param "demands" schedules growing prefixes of the demand set.
    Writes sweep.csv and sweep.png into outdir; returns the rows.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[tuple] = []
    for solver in solvers:
        warm = None
        for value in values:
            if param == "H":
                sc = scenario
                hops = value
            elif param == "demands":
                sc = replace_demands(scenario, value)
                hops = scenario.max_hops
            else:
                raise ValueError(f"unknown sweep parameter {param!r}")
            plan = run_schedule(
                sc, solver, max_hops=hops, warm_start=warm if solver == "tabu" else None
            )
            if solver == "tabu" and param == "H":
                warm = plan
            rows.append((value, solver, plan.objective, plan.total_bound_ns))
    results.write_csv(
        out / "sweep.csv", (param, "solver", "objective", "total_bound_ns"), rows
    )
    plots.plot_sweep([(v, s, o) for v, s, o, _b in rows], out / "sweep.png", param=param)
    return rows


def replace_demands(scenario: Scenario, count: int) -> Scenario:
    if not 0 < count <= len(scenario.demands):
        raise ValueError(f"demand count {count} outside 1..{len(scenario.demands)}")
    return replace(scenario, demands=scenario.demands[:count])
