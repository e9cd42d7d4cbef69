"""Result artifacts: config hashes, plan files, trace CSVs, summary JSON.

Everything written here is canonical: fixed column order, sorted keys,
``\\n`` line endings. Re-exporting the same run yields byte-identical files,
which is what the compare pipeline checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .latency import LatencyReport, ShiftVector
from .netmodel import SPath
from .scheduler import DemandPlan, SchedulePlan
from .scenario import Scenario, scenario_json
from .simulate import HopRecord, PacketTrace

PLAN_FORMAT = "detmec-plan-1"

TRACE_COLUMNS = (
    "demand_id",
    "hypercycle",
    "hop",
    "node",
    "arrival_ns",
    "departure_cycle",
    "queue_slot",
    "completion_ns",
    "latency_ns",
)


def config_hash(scenario: Scenario, options: dict | None = None) -> str:
    """Stable identifier for (scenario, run options)."""
    payload = scenario_json(scenario)
    if options:
        payload += json.dumps(options, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ResultSet:
    scenario_name: str
    config: str
    mode: str
    traces: tuple[PacketTrace, ...]
    stats: dict


# -- plan files ---------------------------------------------------------------


def plan_to_obj(plan: SchedulePlan) -> dict:
    rows = []
    for dp in plan.demands:
        row: dict = {"id": dp.demand_id, "accepted": dp.accepted}
        if dp.accepted:
            row["path"] = list(dp.path.nodes)
            row["rb_cells"] = [[c, f] for c, f in dp.rb_cells]
            row["shifts"] = {
                "breve_r0": dp.shifts.breve_r0,
                "hat_r0": dp.shifts.hat_r0,
                "r_ap": dp.shifts.r_ap,
                "r_server": dp.shifts.r_server,
            }
            row["report"] = {
                "cycles": list(dp.report.cycles),
                "deltas": list(dp.report.deltas),
                "jitter_bound_ns": dp.report.jitter_bound_ns,
            }
        rows.append(row)
    return {
        "format": PLAN_FORMAT,
        "solver": plan.solver,
        "objective": plan.objective,
        "demands": rows,
    }


def obj_to_plan(obj: dict) -> SchedulePlan:
    if obj.get("format") != PLAN_FORMAT:
        raise ValueError(f"unsupported plan format {obj.get('format')!r}")
    demands = []
    for row in obj["demands"]:
        if not row["accepted"]:
            demands.append(DemandPlan(demand_id=row["id"], accepted=False))
            continue
        report = row["report"]
        demands.append(
            DemandPlan(
                demand_id=row["id"],
                accepted=True,
                path=SPath(tuple(row["path"])),
                rb_cells=tuple((int(c), int(f)) for c, f in row["rb_cells"]),
                shifts=ShiftVector(
                    breve_r0=int(row["shifts"]["breve_r0"]),
                    hat_r0=int(row["shifts"]["hat_r0"]),
                    r_ap=int(row["shifts"]["r_ap"]),
                    r_server=int(row["shifts"]["r_server"]),
                ),
                report=LatencyReport(
                    demand_id=row["id"],
                    cycles=tuple(int(c) for c in report["cycles"]),
                    deltas=tuple(int(d) for d in report["deltas"]),
                    jitter_bound_ns=int(report["jitter_bound_ns"]),
                ),
            )
        )
    return SchedulePlan(
        demands=tuple(demands),
        objective=int(obj["objective"]),
        solver=obj.get("solver", ""),
    )


def save_plan(plan: SchedulePlan, path: str | Path) -> None:
    text = json.dumps(plan_to_obj(plan), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_plan(path: str | Path) -> SchedulePlan:
    return obj_to_plan(json.loads(Path(path).read_text(encoding="utf-8")))


# -- delimited output ---------------------------------------------------------


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def trace_rows(traces: Sequence[PacketTrace]) -> list[tuple]:
    rows = []
    for tr in traces:
        for hop_idx, hop in enumerate(tr.hops):
            rows.append(
                (
                    tr.demand_id,
                    tr.hypercycle,
                    hop_idx,
                    hop.node,
                    hop.arrival_ns,
                    hop.departure_cycle,
                    hop.queue_slot,
                    tr.completion_ns,
                    tr.latency_ns,
                )
            )
    return rows


def write_traces_csv(traces: Sequence[PacketTrace], path: str | Path) -> None:
    write_csv(path, TRACE_COLUMNS, trace_rows(traces))


def read_traces_csv(path: str | Path) -> list[PacketTrace]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != ",".join(TRACE_COLUMNS):
        raise ValueError(f"unexpected trace header in {path}")
    grouped: dict[tuple[str, int], list] = {}
    meta: dict[tuple[str, int], tuple[int, int]] = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        key = (parts[0], int(parts[1]))
        grouped.setdefault(key, []).append(
            (int(parts[2]), HopRecord(parts[3], int(parts[4]), int(parts[5]), int(parts[6])))
        )
        meta[key] = (int(parts[7]), int(parts[8]))
    traces = []
    for key in sorted(grouped):
        hops = tuple(h for _i, h in sorted(grouped[key], key=lambda t: t[0]))
        completion, latency = meta[key]
        traces.append(
            PacketTrace(
                demand_id=key[0],
                hypercycle=key[1],
                hops=hops,
                completion_ns=completion,
                latency_ns=latency,
            )
        )
    return traces


def write_summary_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
