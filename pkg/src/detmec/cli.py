"""Command-line interface.

Subcommands: generate, schedule, simulate, compare, sweep.
Exit codes: 0 on success, 2 on validation failure (bad scenario file or a
plan that does not fit the scenario), 3 when the exact solver refuses an
oversized instance.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import plots, results, runner
from .scenario import ScenarioError, generate_scenario, load_scenario, save_scenario
from .scheduler import InstanceTooLarge
from .simulate import SimulationError


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="detmec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a scenario file from a named profile")
    g.add_argument("--profile", default="tiny", choices=("tiny", "paper-like", "stress"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)

    s = sub.add_parser("schedule", help="compute an admission plan for a scenario")
    s.add_argument("scenario")
    s.add_argument("--solver", default="tabu", choices=runner.SOLVERS)
    s.add_argument("--H", type=int, default=None, help="hop bound override")
    s.add_argument("-o", "--output", required=True)

    m = sub.add_parser("simulate", help="replay a plan and export packet traces")
    m.add_argument("scenario")
    m.add_argument("plan")
    m.add_argument("--mode", default="det", choices=("det", "besteffort"))
    m.add_argument("--hypercycles", type=int, default=100)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--utilization", type=float, default=None,
                   help="background load for besteffort mode")
    m.add_argument("-o", "--output", required=True, help="trace CSV path")

    c = sub.add_parser("compare", help="deterministic vs best-effort jitter report")
    c.add_argument("scenario")
    c.add_argument("plan")
    c.add_argument("--hypercycles", type=int, default=100)
    c.add_argument("--utilizations", default="0.2,0.4,0.6,0.8")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--outdir", required=True)

    w = sub.add_parser("sweep", help="objective vs hop bound or demand count")
    w.add_argument("scenario")
    w.add_argument("--param", default="H", choices=("H", "demands"))
    w.add_argument("--range", dest="value_range", required=True, help="a..b inclusive")
    w.add_argument("--outdir", required=True)
    return p


def _cmd_generate(args) -> int:
    sc = generate_scenario(args.profile, args.seed)
    save_scenario(sc, args.output)
    print(f"wrote {sc.name}: {len(sc.demands)} demands, "
          f"{len(sc.graph.nodes)} nodes -> {args.output}")
    return 0


def _cmd_schedule(args) -> int:
    sc = load_scenario(args.scenario)
    plan = runner.run_schedule(sc, args.solver, max_hops=args.H)
    problems = runner.check_plan(sc, plan, max_hops=args.H)
    if problems:
        for v in problems:
            print(f"violation {v.code}: {v.subject} {v.detail}", file=sys.stderr)
        return 2
    results.save_plan(plan, args.output)
    print(f"solver={plan.solver} admitted {plan.objective}/{len(sc.demands)} "
          f"total_bound_ns={plan.total_bound_ns} -> {args.output}")
    return 0


def _cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    plan = results.load_plan(args.plan)
    problems = runner.check_plan(sc, plan)
    if problems:
        for v in problems:
            print(f"violation {v.code}: {v.subject} {v.detail}", file=sys.stderr)
        return 2
    traces, stats = runner.run_simulation(
        sc, plan, args.mode, hypercycles=args.hypercycles,
        seed=args.seed, utilization=args.utilization,
    )
    out = Path(args.output)
    results.write_traces_csv(traces, out)
    plots.plot_latency_series(traces, out.with_suffix(".png"),
                              title=f"{sc.name} [{args.mode}]")
    results.write_summary_json(
        out.with_suffix(".summary.json"),
        {
            "config": results.config_hash(
                sc, {"mode": args.mode, "hypercycles": args.hypercycles}
            ),
            "mode": args.mode,
            "stats": stats,
        },
    )
    print(f"mode={args.mode} traces={len(traces)} "
          f"max_jitter_ns={stats['overall']['max_jitter_ns']} -> {out}")
    return 0


def _cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    plan = results.load_plan(args.plan)
    problems = runner.check_plan(sc, plan)
    if problems:
        for v in problems:
            print(f"violation {v.code}: {v.subject} {v.detail}", file=sys.stderr)
        return 2
    utils = tuple(float(u) for u in args.utilizations.split(",") if u)
    rows = runner.run_compare(
        sc, plan, args.outdir, hypercycles=args.hypercycles,
        utilizations=utils, seed=args.seed,
    )
    for mode, util, jitter in rows:
        print(f"{mode:>10} u={util:.2f} max_jitter_ns={jitter}")
    print(f"report -> {args.outdir}")
    return 0


def _cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    values = runner.parse_sweep_range(args.value_range)
    rows = runner.run_sweep(sc, args.param, values, args.outdir)
    for value, solver, objective, bound in rows:
        print(f"{args.param}={value} {solver:>8} objective={objective} "
              f"total_bound_ns={bound}")
    print(f"report -> {args.outdir}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "schedule": _cmd_schedule,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation refused: {exc}", file=sys.stderr)
        return 2
    except InstanceTooLarge as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
