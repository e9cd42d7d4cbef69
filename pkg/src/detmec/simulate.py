"""Cycle-accurate execution of a committed plan, plus a best-effort baseline.

Deterministic mode models the forwarding fabric faithfully: every egress
port runs a ring of Q cyclic queues (one sending, Q-1 receiving) on its
node's local clock; a packet carries its sender's cycle identifier, and the
receiving port places it into the queue for (mapped cycle + shift), exactly
the swap the plan assumed. Serialization within a sending cycle starts at a
seeded random offset inside the cycle's slack, so arrival instants wander
while departure cycles stay pinned. All times are absolute integer
nanoseconds; nothing is quantized to floats.

Best-effort mode drops all gating: plain store-and-forward FIFO queues at
line rate, a FIFO radio uplink per AP, a FIFO server, and seeded on/off
background bursts sharing the wired queues. Same demands, same paths, same
arrival draws, so the two modes are directly comparable per seed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from random import Random
from typing import Iterable, Sequence

from .netmodel import Demand, NetworkGraph, RBGrid
from .scheduler import SchedulePlan, validate_plan
from .timefabric import ClockMap, Domain, TimingConfig, _mapped_end_index

NS_PER_S = 1_000_000_000


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HopRecord:
    node: str
    arrival_ns: int
    departure_cycle: int  # in-hypercycle index on the node's local clock
    queue_slot: int


@dataclass(frozen=True)
class PacketTrace:
    demand_id: str
    hypercycle: int
    hops: tuple[HopRecord, ...]
    completion_ns: int
    latency_ns: int


class PortQueues:
    """Ring of Q cyclic queues for one egress port.

    Queues are addressed by absolute local cycle; slot = cycle mod Q. At any
    instant the queue of the cycle in progress is sending and the next Q-1
    are receiving. Enqueue enforces exactly that window: a packet may only
    target a cycle that is still receiving when it arrives (the cycle just
    starting is allowed at its exact boundary instant).
    """

    def __init__(self, origin_ns: int, cycle_ns: int, queue_count: int):
        self.origin_ns = origin_ns
        self.cycle_ns = cycle_ns
        self.queue_count = queue_count
        self.pending: dict[int, list] = {}

    def cycle_at(self, t_ns: int) -> int:
        return (t_ns - self.origin_ns) // self.cycle_ns

    def cycle_start(self, cycle: int) -> int:
        return self.origin_ns + cycle * self.cycle_ns

    def enqueue(self, t_arrival: int, target_cycle: int, item) -> int:
        cur = self.cycle_at(t_arrival)
        on_boundary = t_arrival == self.cycle_start(cur)
        floor_ok = target_cycle > cur or (target_cycle == cur and on_boundary)
        if not floor_ok:
            raise SimulationError(
                f"packet for cycle {target_cycle} arrived at {t_arrival} inside cycle {cur}"
            )
        if target_cycle - cur > self.queue_count - 1:
            raise SimulationError(
                f"packet for cycle {target_cycle} arrived too early (cycle {cur}, Q={self.queue_count})"
            )
        self.pending.setdefault(target_cycle, []).append((t_arrival, item))
        return target_cycle % self.queue_count

    def drain(self, cycle: int) -> list:
        items = self.pending.pop(cycle, [])
        items.sort(key=lambda pair: (pair[0], pair[1].demand.id))
        return [item for _, item in items]


@dataclass(frozen=True)
class BackgroundTraffic:
    """Seeded on/off burst generators attached to wired links.

    Each link fires one burst of ``burst_bits`` every period, the period
    chosen so the burst serialization time is ``utilization`` of the line:
    period = burst_bits / (utilization * bandwidth). Phases are drawn per
    link from ``seed``.
    """

    utilization: float = 0.0
    burst_bits: int = 2_500_000
    seed: int = 0
    links: tuple[tuple[str, str], ...] | None = None


class _Task:
    __slots__ = ("demand", "hypercycle", "path", "shifts", "t0", "hops", "hop_idx")

    def __init__(self, demand: Demand, hypercycle: int, path, shifts, t0: int):
        self.demand = demand
        self.hypercycle = hypercycle
        self.path = path
        self.shifts = shifts
        self.t0 = t0
        self.hops: list[HopRecord] = []
        self.hop_idx = 0


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _child_seed(seed: int, salt: int) -> int:
    return seed * 1_000_003 + salt


def run_deterministic(
    plan: SchedulePlan,
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    hypercycles: int = 100,
    seed: int = 0,
) -> list[PacketTrace]:
    """Execute the plan for ``hypercycles`` repetitions; one trace per
    accepted (demand, hypercycle).

    Refuses plans that do not validate. Task arrival instants are drawn
    uniformly inside the arrival TTI, and ports emit at a random offset
    within their cycle slack, both from ``seed``; identical seeds give
    identical traces.
    """
    byid = {d.id: d for d in demands}
    accepted = [dp for dp in plan.demands if dp.accepted]
    max_hops = max((dp.path.hop_count for dp in accepted), default=2)
    problems = validate_plan(plan, demands, graph, grid, timing, clocks, max_hops)
    if problems:
        raise SimulationError(f"plan does not validate: {problems[:3]}")
    if not accepted:
        return []

    arrival_rng = Random(_child_seed(seed, 1))
    emit_rng = Random(_child_seed(seed, 2))
    ran = timing.tag(Domain.RAN)
    wn = timing.tag(Domain.WN)
    mecs = timing.tag(Domain.MECS)

    ports: dict[tuple[str, str], PortQueues] = {}

    def port(u: str, v: str) -> PortQueues:
        key = (u, v)
        if key not in ports:
            origin = clocks.frame_offset(u, Domain.WN)
            ports[key] = PortQueues(origin, timing.delta_dip, timing.queue_count)
        return ports[key]

    def server_ring(s: str) -> PortQueues:
        key = (s, "cpu")
        if key not in ports:
            ports[key] = PortQueues(
                clocks.frame_offset(s, Domain.MECS), timing.delta_mec, timing.queue_count
            )
        return ports[key]

    heap: list[tuple[int, int, tuple, int]] = []  # (start, seq, port key, cycle)
    scheduled: set[tuple[tuple, int]] = set()
    seq = 0

    def activate(ring: PortQueues, key: tuple, cycle: int) -> None:
        nonlocal seq
        if (key, cycle) in scheduled:
            return
        scheduled.add((key, cycle))
        seq += 1
        heapq.heappush(heap, (ring.cycle_start(cycle), seq, key, cycle))

    # radio phase: reservation-isolated, so computed directly per task
    for h in range(hypercycles):
        for dp in accepted:
            d = byid[dp.demand_id]
            ap = dp.path.ap
            tti_origin = clocks.frame_offset(ap, Domain.RAN)
            tti_abs = h * timing.n_tti + d.arrival_tti
            t0 = tti_origin + tti_abs * timing.delta_tti + arrival_rng.randrange(timing.delta_tti)
            task = _Task(d, h, dp.path, dp.shifts, t0)
            c0_abs = tti_abs + dp.shifts.r0
            radio_done = tti_origin + (c0_abs + 1) * timing.delta_tti
            task.hops.append(HopRecord(d.source, t0, c0_abs % timing.n_tti, 0))
            # hand into the AP's egress ring via the radio->forwarding map
            tau_int = clocks.tau_ap_internal(ap)
            target = _mapped_end_index(c0_abs, ran, wn, 0, tau_int) + dp.shifts.r_ap
            ring = port(ap, dp.path.nodes[2])
            slot = ring.enqueue(radio_done, target, task)
            task.hops.append(HopRecord(ap, radio_done, target % timing.n_dip, slot))
            task.hop_idx = 1
            activate(ring, (ap, dp.path.nodes[2]), target)

    done: list[PacketTrace] = []
    while heap:
        _, _, key, cycle = heapq.heappop(heap)
        ring = ports[key]
        items: list[_Task] = ring.drain(cycle)
        if not items:
            continue
        start = ring.cycle_start(cycle)
        if key[1] == "cpu":
            srv = key[0]
            rate = graph.server_rate[srv]
            total = sum(t.demand.payload_bits * graph.kappa for t in items)
            busy = _ceil_div(total * NS_PER_S, rate)
            assert busy <= timing.delta_mec, "server cycle overcommitted despite reservations"
            offset = emit_rng.randrange(timing.delta_mec - busy + 1)
            cum = 0
            for task in items:
                cum += task.demand.payload_bits * graph.kappa
                completion = start + offset + _ceil_div(cum * NS_PER_S, rate)
                done.append(
                    PacketTrace(
                        task.demand.id,
                        task.hypercycle,
                        tuple(task.hops),
                        completion,
                        completion - task.t0,
                    )
                )
            continue
        u, v = key
        link = graph.link(u, v)
        total_bits = sum(t.demand.payload_bits for t in items)
        busy = _ceil_div(total_bits * NS_PER_S, link.bandwidth_bps)
        assert busy <= timing.delta_dip, "link cycle overcommitted despite reservations"
        offset = emit_rng.randrange(timing.delta_dip - busy + 1)
        cum_bits = 0
        for task in items:
            cum_bits += task.demand.payload_bits
            dep = start + offset + _ceil_div(cum_bits * NS_PER_S, link.bandwidth_bps)
            arrive = dep + link.delay_ns
            task.hop_idx += 1
            if v == task.path.server:
                # cycle-identifier swap into the server's computation ring
                tau_hc = clocks.tau_hc(u, Domain.WN, v, Domain.MECS)
                target = _mapped_end_index(cycle, wn, mecs, link.delay_ns, tau_hc)
                target += task.shifts.r_server
                sring = server_ring(v)
                slot = sring.enqueue(arrive, target, task)
                task.hops.append(HopRecord(v, arrive, target % timing.n_mec, slot))
                activate(sring, (v, "cpu"), target)
            else:
                # interior router: swap plus the fixed one-cycle shift
                after = task.path.nodes[task.hop_idx + 1]
                tau_hc = clocks.tau_hc(u, Domain.WN, v, Domain.WN)
                target = _mapped_end_index(cycle, wn, wn, link.delay_ns, tau_hc) + 1
                nring = port(v, after)
                slot = nring.enqueue(arrive, target, task)
                task.hops.append(HopRecord(v, arrive, target % timing.n_dip, slot))
                activate(nring, (v, after), target)

    done.sort(key=lambda tr: (tr.demand_id, tr.hypercycle))
    return done


def run_best_effort(
    plan: SchedulePlan,
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    background: BackgroundTraffic = BackgroundTraffic(),
    hypercycles: int = 100,
    seed: int = 0,
) -> list[PacketTrace]:
    """Same demands and paths with no cycle gating: FIFO queues everywhere.

    The radio uplink is a FIFO pipe at the grid's aggregate rate, each wired
    egress a store-and-forward FIFO at line rate, the server a FIFO
    processor. Background bursts (if utilization > 0) share the wired FIFOs.
    Arrival instants reuse the deterministic mode's stream, so latency
    differences per (demand, hypercycle) are attributable to queueing alone.
    """
    byid = {d.id: d for d in demands}
    accepted = [dp for dp in plan.demands if dp.accepted]
    if not accepted:
        return []
    arrival_rng = Random(_child_seed(seed, 1))
    bg_rng = Random(_child_seed(background.seed or seed, 3))

    air_rate = max(1, sum(grid.capacity.values()) * NS_PER_S // (grid.n_tti * timing.delta_tti))

    busy_until: dict = {}
    heap: list[tuple[int, int, str, tuple]] = []
    seq = 0

    def push(t: int, kind: str, data: tuple) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(heap, (t, seq, kind, data))

    # demand tasks, arrival draws in the same canonical order as det mode
    tasks: list[_Task] = []
    for h in range(hypercycles):
        for dp in accepted:
            d = byid[dp.demand_id]
            ap = dp.path.ap
            tti_origin = clocks.frame_offset(ap, Domain.RAN)
            tti_abs = h * timing.n_tti + d.arrival_tti
            t0 = tti_origin + tti_abs * timing.delta_tti + arrival_rng.randrange(timing.delta_tti)
            task = _Task(d, h, dp.path, dp.shifts, t0)
            tasks.append(task)
            push(t0, "air", (task,))

    horizon = timing.delta_hc * (hypercycles + 10) + 20_000_000
    if background.utilization > 0:
        targets = background.links or tuple(sorted(graph.links))
        for lk in sorted(targets):
            bw = graph.links[lk].bandwidth_bps
            period = int(background.burst_bits * NS_PER_S / (background.utilization * bw))
            phase = bg_rng.randrange(max(1, period))
            push(phase, "bg", (lk, period))

    traces: list[PacketTrace] = []
    while heap:
        t, _, kind, data = heapq.heappop(heap)
        if kind == "bg":
            lk, period = data
            bw = graph.links[lk].bandwidth_bps
            key = ("link", lk)
            start = max(t, busy_until.get(key, 0))
            busy_until[key] = start + _ceil_div(background.burst_bits * NS_PER_S, bw)
            if t + period <= horizon:
                push(t + period, "bg", (lk, period))
            continue
        if kind == "air":
            (task,) = data
            ap = task.path.ap
            key = ("air", ap)
            start = max(t, busy_until.get(key, 0))
            fin = start + _ceil_div(task.demand.payload_bits * NS_PER_S, air_rate)
            busy_until[key] = fin
            tti_origin = clocks.frame_offset(ap, Domain.RAN)
            cyc = ((fin - tti_origin) // timing.delta_tti) % timing.n_tti
            task.hops.append(HopRecord(task.demand.source, task.t0, cyc, 0))
            task.hop_idx = 1
            push(fin, "hop", (task,))
            continue
        if kind == "hop":
            (task,) = data
            u = task.path.nodes[task.hop_idx]
            v = task.path.nodes[task.hop_idx + 1]
            link = graph.link(u, v)
            key = ("link", (u, v))
            start = max(t, busy_until.get(key, 0))
            fin = start + _ceil_div(task.demand.payload_bits * NS_PER_S, link.bandwidth_bps)
            busy_until[key] = fin
            origin = clocks.frame_offset(u, Domain.WN)
            cyc = ((fin - origin) // timing.delta_dip) % timing.n_dip
            task.hops.append(HopRecord(u, t, cyc, 0))
            arrive = fin + link.delay_ns
            task.hop_idx += 1
            if task.hop_idx == task.path.hop_count:
                push(arrive, "srv", (task,))
            else:
                push(arrive, "hop", (task,))
            continue
        # kind == "srv"
        (task,) = data
        srv = task.path.server
        key = ("srv", srv)
        start = max(t, busy_until.get(key, 0))
        work = task.demand.payload_bits * graph.kappa
        fin = start + _ceil_div(work * NS_PER_S, graph.server_rate[srv])
        busy_until[key] = fin
        origin = clocks.frame_offset(srv, Domain.MECS)
        cyc = ((fin - origin) // timing.delta_mec) % timing.n_mec
        task.hops.append(HopRecord(srv, t, cyc, 0))
        traces.append(
            PacketTrace(task.demand.id, task.hypercycle, tuple(task.hops), fin, fin - task.t0)
        )

    traces.sort(key=lambda tr: (tr.demand_id, tr.hypercycle))
    return traces


def trace_stats(traces: Iterable[PacketTrace], demands: Sequence[Demand] = ()) -> dict:
    """Per-demand and aggregate latency statistics.

    Deadline misses are counted only when ``demands`` is provided.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to summarize")
    deadlines = {d.id: d.deadline_ns for d in demands}
    per: dict[str, dict] = {}
    groups: dict[str, list[int]] = {}
    for tr in traces:
        groups.setdefault(tr.demand_id, []).append(tr.latency_ns)
    for did in sorted(groups):
        lat = groups[did]
        misses = (
            sum(1 for x in lat if x > deadlines[did]) if did in deadlines else 0
        )
        per[did] = {
            "count": len(lat),
            "min_ns": min(lat),
            "max_ns": max(lat),
            "mean_ns": sum(lat) / len(lat),
            "jitter_ns": max(lat) - min(lat),
            "deadline_miss": misses,
        }
    all_lat = [tr.latency_ns for tr in traces]
    return {
        "per_demand": per,
        "overall": {
            "count": len(all_lat),
            "min_ns": min(all_lat),
            "max_ns": max(all_lat),
            "mean_ns": sum(all_lat) / len(all_lat),
            "max_jitter_ns": max(row["jitter_ns"] for row in per.values()),
            "deadline_miss": sum(row["deadline_miss"] for row in per.values()),
        },
    }
