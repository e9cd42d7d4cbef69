"""Scenario definition: generation profiles, strict JSON loading, canonical saving.

A scenario bundles everything a run needs: timing, graph, radio grid,
demands, clock offsets, background-traffic settings, and the named seeds
that produced them. Serialization is canonical (sorted keys, fixed layout),
so identical scenarios produce byte-identical files and a stable hash.

Profiles:

* ``tiny``       -- 7 nodes, 3..6 demands, 4 candidate paths, small enough
                    for the exact solver; used for oracle cross-checks.
* ``paper-like`` -- 10 APs with 4 devices each, 10 aggregation and 5 core
                    routers, 3 edge + 2 central servers, 10 Gbps links with
                    30..60 us delays, 20 cyclic queues. Arrivals cluster in
                    the first TTI so per-cycle server budgets actually bind;
                    shifting is what separates the solvers here.
* ``stress``     -- paper-like topology with twice the demands, saturating
                    the radio grid; admission control must reject.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .netmodel import Demand, Link, NetworkGraph, NodeKind, RBGrid, validate_graph
from .simulate import BackgroundTraffic
from .timefabric import ClockMap, TimingConfig, compute_hypercycle

US = 1_000


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""


@dataclass
class Scenario:
    name: str
    profile: str
    seeds: dict[str, int]
    timing: TimingConfig
    graph: NetworkGraph
    grid: RBGrid
    demands: tuple[Demand, ...]
    clocks: ClockMap
    background: BackgroundTraffic
    max_hops: int
    explicit_n_hc: int | None = None


def shannon_rb_bits(
    bandwidth_hz: float,
    tti_ns: int,
    tx_power_dbm: float = 20.0,
    noise_dbm: float = -120.0,
    distance_m: float = 20.0,
    path_loss_exp: float = 3.0,
) -> int:
    """Rough per-RB capacity from a log-distance link budget.

    Provided as a convenience for writing scenarios by hand; the generator
    profiles use fixed per-RB capacities instead, since the solver only ever
    sees the resulting bit values.
    """
    rx_dbm = tx_power_dbm - (40.0 + 10.0 * path_loss_exp * math.log10(max(distance_m, 1.0)))
    snr = 10.0 ** ((rx_dbm - noise_dbm) / 10.0)
    return int(bandwidth_hz * math.log2(1.0 + snr) * (tti_ns / 1e9))


def _child(seed: int, salt: int) -> int:
    return seed * 1_000_003 + salt


def _build_clocks(graph: NetworkGraph, seed: int, node_range_ns: int, ap_range_ns: int) -> ClockMap:
    rng = Random(_child(seed, 11))
    offsets = {}
    internal = {}
    for node in sorted(graph.nodes):
        if graph.nodes[node] is NodeKind.DEVICE:
            continue
        offsets[node] = rng.randrange(node_range_ns) if node_range_ns > 0 else 0
        if graph.nodes[node] is NodeKind.AP:
            internal[node] = rng.randrange(ap_range_ns) if ap_range_ns > 0 else 0
    return ClockMap(node_offsets=offsets, ap_internal=internal)


def _tiny(seed: int) -> Scenario:
    rng = Random(_child(seed, 1))
    nodes: dict[str, NodeKind] = {
        "dev0": NodeKind.DEVICE,
        "dev1": NodeKind.DEVICE,
        "ap0": NodeKind.AP,
        "r0": NodeKind.ROUTER,
        "r1": NodeKind.ROUTER,
        "s0": NodeKind.SERVER,
        "s1": NodeKind.SERVER,
    }
    links = {}
    for u, v in (("ap0", "r0"), ("ap0", "r1"), ("r0", "s0"), ("r0", "s1"),
                 ("r1", "s0"), ("r1", "s1")):
        links[(u, v)] = Link(u, v, rng.randrange(5 * US, 15 * US + 1), 1_000_000_000)
    graph = NetworkGraph(
        nodes=nodes,
        links=links,
        attachments=(("dev0", "ap0"), ("dev1", "ap0")),
        server_rate={"s0": 3_200_000_000, "s1": 2_400_000_000},
        kappa=10,
    )
    n_demands = 3 + rng.randrange(4)
    demands = []
    for i in range(n_demands):
        demands.append(
            Demand(
                id=f"d{i}",
                source=f"dev{i % 2}",
                period_ns=200 * US,
                arrival_tti=rng.randrange(2),
                payload_bits=rng.choice((4000, 8000, 12000)),
                deadline_ns=rng.randrange(500, 901, 50) * US,
            )
        )
    timing = compute_hypercycle(100 * US, 20 * US, 50 * US, (200 * US,), queue_count=4)
    grid = RBGrid.uniform(timing.n_tti, 8, 4000)
    clocks = _build_clocks(graph, seed, 40 * US, 20 * US)
    return Scenario(
        name=f"tiny-{seed}",
        profile="tiny",
        seeds={"topology": seed, "offsets": seed, "traffic": seed, "solver": seed},
        timing=timing,
        graph=graph,
        grid=grid,
        demands=tuple(demands),
        clocks=clocks,
        background=BackgroundTraffic(utilization=0.0, burst_bits=250_000, seed=seed),
        max_hops=3,
    )


def _paper_like(seed: int, demand_count: int = 40) -> Scenario:
    rng = Random(_child(seed, 2))
    nodes: dict[str, NodeKind] = {}
    links: dict[tuple[str, str], Link] = {}
    attachments = []

    def wire(u: str, v: str) -> None:
        if (u, v) not in links:
            links[(u, v)] = Link(u, v, rng.randrange(30 * US, 60 * US + 1), 10_000_000_000)

    aps = [f"ap{i:02d}" for i in range(10)]
    aggs = [f"agg{i:02d}" for i in range(10)]
    cores = [f"core{i}" for i in range(5)]
    edges = [f"srve{i}" for i in range(3)]
    centrals = [f"srvc{i}" for i in range(2)]
    for name in aps:
        nodes[name] = NodeKind.AP
    for name in aggs:
        nodes[name] = NodeKind.ROUTER
    for name in cores:
        nodes[name] = NodeKind.ROUTER
    for name in edges + centrals:
        nodes[name] = NodeKind.SERVER

    for i, ap in enumerate(aps):
        first = i % 10
        second = (i + 1 + rng.randrange(3)) % 10
        wire(ap, aggs[first])
        wire(ap, aggs[second if second != first else (first + 1) % 10])
    for i, agg in enumerate(aggs):
        wire(agg, aggs[(i + 1) % 10])
        wire(agg, cores[i % 5])
        wire(agg, cores[(i + 2) % 5])
    for i, core in enumerate(cores):
        wire(core, cores[(i + 1) % 5])
    for j, srv in enumerate(edges):
        wire(aggs[2 * j], srv)
        wire(aggs[2 * j + 1], srv)
    for j, srv in enumerate(centrals):
        wire(cores[2 * j], srv)
        wire(cores[2 * j + 1], srv)

    devices = []
    for i in range(demand_count):
        dev = f"dev{i:02d}"
        nodes[dev] = NodeKind.DEVICE
        attachments.append((dev, aps[i % 10]))
        devices.append(dev)

    server_rate = {s: 5_400_000_000 for s in edges}
    server_rate.update({s: 11_000_000_000 for s in centrals})
    graph = NetworkGraph(
        nodes=nodes,
        links=links,
        attachments=tuple(attachments),
        server_rate=server_rate,
        kappa=10,
    )
    demands = tuple(
        Demand(
            id=f"d{i:02d}",
            source=devices[i],
            period_ns=750 * US,
            arrival_tti=0,
            payload_bits=8000,
            deadline_ns=1000 * US,
        )
        for i in range(demand_count)
    )
    timing = compute_hypercycle(125 * US, 15 * US, 30 * US, (750 * US,), queue_count=20)
    grid = RBGrid.uniform(timing.n_tti, 24, 3000)
    clocks = _build_clocks(graph, seed, 5 * US, 5 * US)
    return Scenario(
        name=f"paper-like-{seed}",
        profile="paper-like",
        seeds={"topology": seed, "offsets": seed, "traffic": seed, "solver": seed},
        timing=timing,
        graph=graph,
        grid=grid,
        demands=demands,
        clocks=clocks,
        background=BackgroundTraffic(utilization=0.0, burst_bits=2_500_000, seed=seed),
        max_hops=4,
    )


def generate_scenario(profile: str, seed: int = 0) -> Scenario:
    """Deterministic scenario from a named profile; same seed, same scenario."""
    if profile == "tiny":
        return _tiny(seed)
    if profile == "paper-like":
        return _paper_like(seed)
    if profile == "stress":
        sc = _paper_like(seed, demand_count=80)
        sc.name = f"stress-{seed}"
        sc.profile = "stress"
        return sc
    raise ScenarioError(f"unknown profile {profile!r}")


# -- serialization -----------------------------------------------------------

_TOP_KEYS = {
    "format", "name", "profile", "seeds", "timing", "graph", "rb_grid",
    "demands", "clocks", "background", "max_hops",
}


def _expect_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown keys in {where}: {sorted(unknown)}")


def scenario_to_obj(sc: Scenario) -> dict:
    timing = {
        "delta_tti_ns": sc.timing.delta_tti,
        "delta_dip_ns": sc.timing.delta_dip,
        "delta_mec_ns": sc.timing.delta_mec,
        "queue_count": sc.timing.queue_count,
    }
    if sc.explicit_n_hc is not None:
        timing["n_hc"] = sc.explicit_n_hc
    return {
        "format": "detmec-scenario-1",
        "name": sc.name,
        "profile": sc.profile,
        "seeds": dict(sorted(sc.seeds.items())),
        "timing": timing,
        "graph": {
            "nodes": [
                {"id": n, "kind": k.value} for n, k in sorted(sc.graph.nodes.items())
            ],
            "links": [
                {
                    "src": l.src,
                    "dst": l.dst,
                    "delay_ns": l.delay_ns,
                    "bandwidth_bps": l.bandwidth_bps,
                }
                for (_u, _v), l in sorted(sc.graph.links.items())
            ],
            "attachments": [list(pair) for pair in sorted(sc.graph.attachments)],
            "server_rate": dict(sorted(sc.graph.server_rate.items())),
            "kappa": sc.graph.kappa,
        },
        "rb_grid": _grid_to_obj(sc.grid),
        "demands": [
            {
                "id": d.id,
                "source": d.source,
                "period_ns": d.period_ns,
                "arrival_tti": d.arrival_tti,
                "payload_bits": d.payload_bits,
                "deadline_ns": d.deadline_ns,
            }
            for d in sc.demands
        ],
        "clocks": {
            "node_offsets": dict(sorted(sc.clocks.node_offsets.items())),
            "ap_internal": dict(sorted(sc.clocks.ap_internal.items())),
        },
        "background": {
            "utilization": sc.background.utilization,
            "burst_bits": sc.background.burst_bits,
            "seed": sc.background.seed,
            "links": None
            if sc.background.links is None
            else [list(pair) for pair in sc.background.links],
        },
        "max_hops": sc.max_hops,
    }


def _grid_to_obj(grid: RBGrid) -> dict:
    caps = {grid.capacity[(c, f)] for c in range(grid.n_tti) for f in grid.bands}
    if len(caps) != 1:
        raise ScenarioError("only uniform per-RB capacities are serializable")
    return {"bands": len(grid.bands), "bits_per_rb": caps.pop()}


def scenario_json(sc: Scenario) -> str:
    """Canonical single-string form; identical scenarios give identical text."""
    return json.dumps(scenario_to_obj(sc), indent=2, sort_keys=True) + "\n"


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(scenario_json(sc), encoding="utf-8")


def _obj_to_scenario(obj: dict) -> Scenario:
    _expect_keys(obj, _TOP_KEYS, "scenario")
    if obj.get("format") != "detmec-scenario-1":
        raise ScenarioError(f"unsupported format {obj.get('format')!r}")
    tsec = obj["timing"]
    _expect_keys(tsec, {"delta_tti_ns", "delta_dip_ns", "delta_mec_ns", "queue_count", "n_hc"}, "timing")
    gsec = obj["graph"]
    _expect_keys(gsec, {"nodes", "links", "attachments", "server_rate", "kappa"}, "graph")
    nodes = {}
    for row in gsec["nodes"]:
        _expect_keys(row, {"id", "kind"}, "graph.nodes[]")
        nodes[row["id"]] = NodeKind(row["kind"])
    links = {}
    for row in gsec["links"]:
        _expect_keys(row, {"src", "dst", "delay_ns", "bandwidth_bps"}, "graph.links[]")
        links[(row["src"], row["dst"])] = Link(
            row["src"], row["dst"], int(row["delay_ns"]), int(row["bandwidth_bps"])
        )
    graph = NetworkGraph(
        nodes=nodes,
        links=links,
        attachments=tuple((d, a) for d, a in gsec["attachments"]),
        server_rate={k: int(v) for k, v in gsec["server_rate"].items()},
        kappa=int(gsec["kappa"]),
    )
    demands = []
    for row in obj["demands"]:
        _expect_keys(
            row,
            {"id", "source", "period_ns", "arrival_tti", "payload_bits", "deadline_ns"},
            "demands[]",
        )
        demands.append(
            Demand(
                id=row["id"],
                source=row["source"],
                period_ns=int(row["period_ns"]),
                arrival_tti=int(row["arrival_tti"]),
                payload_bits=int(row["payload_bits"]),
                deadline_ns=int(row["deadline_ns"]),
            )
        )
    periods = tuple(sorted({d.period_ns for d in demands}))
    timing = compute_hypercycle(
        int(tsec["delta_tti_ns"]),
        int(tsec["delta_dip_ns"]),
        int(tsec["delta_mec_ns"]),
        periods,
        queue_count=int(tsec["queue_count"]),
    )
    explicit_n_hc = None
    if "n_hc" in tsec:
        explicit_n_hc = int(tsec["n_hc"])
        base = timing.delta_hc // timing.n_hc
        if explicit_n_hc < timing.n_hc:
            raise ScenarioError(
                f"explicit n_hc={explicit_n_hc} below the minimum {timing.n_hc}"
            )
        delta_hc = explicit_n_hc * base
        timing = TimingConfig(
            delta_tti=timing.delta_tti,
            delta_dip=timing.delta_dip,
            delta_mec=timing.delta_mec,
            queue_count=timing.queue_count,
            n_hc=explicit_n_hc,
            delta_hc=delta_hc,
            n_tti=delta_hc // timing.delta_tti,
            n_dip=delta_hc // timing.delta_dip,
            n_mec=delta_hc // timing.delta_mec,
        )
    rsec = obj["rb_grid"]
    _expect_keys(rsec, {"bands", "bits_per_rb"}, "rb_grid")
    grid = RBGrid.uniform(timing.n_tti, int(rsec["bands"]), int(rsec["bits_per_rb"]))
    csec = obj["clocks"]
    if "randomize" in csec:
        _expect_keys(csec, {"randomize"}, "clocks")
        rnd = csec["randomize"]
        _expect_keys(rnd, {"seed", "node_range_ns", "ap_range_ns"}, "clocks.randomize")
        clocks = _build_clocks(
            graph, int(rnd["seed"]), int(rnd["node_range_ns"]), int(rnd["ap_range_ns"])
        )
    else:
        _expect_keys(csec, {"node_offsets", "ap_internal"}, "clocks")
        clocks = ClockMap(
            node_offsets={k: int(v) for k, v in csec["node_offsets"].items()},
            ap_internal={k: int(v) for k, v in csec["ap_internal"].items()},
        )
    bsec = obj["background"]
    _expect_keys(bsec, {"utilization", "burst_bits", "seed", "links"}, "background")
    background = BackgroundTraffic(
        utilization=float(bsec["utilization"]),
        burst_bits=int(bsec["burst_bits"]),
        seed=int(bsec["seed"]),
        links=None if bsec["links"] is None else tuple((u, v) for u, v in bsec["links"]),
    )
    sc = Scenario(
        name=obj["name"],
        profile=obj["profile"],
        seeds={k: int(v) for k, v in obj["seeds"].items()},
        timing=timing,
        graph=graph,
        grid=grid,
        demands=tuple(demands),
        clocks=clocks,
        background=background,
        max_hops=int(obj["max_hops"]),
        explicit_n_hc=explicit_n_hc,
    )
    problems = validate_graph(graph, timing, demands)
    if problems:
        raise ScenarioError(
            "scenario fails validation: "
            + "; ".join(f"{v.code}({v.subject})" for v in problems[:8])
        )
    return sc


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file; unknown keys are errors."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    return _obj_to_scenario(obj)
