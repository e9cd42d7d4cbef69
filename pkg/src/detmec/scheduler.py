"""Admission planning: which demands to accept, on which path and server,
with which radio window and cycle shifts.

The objective is the number of accepted demands. Three solvers share one
configuration space per demand (candidate path, radio-window start offset,
AP shift, server shift, with the radio fill itself canonical: earliest free
TTIs, lowest bands first, just enough cells for the payload):

* ``solve_tabu``      -- local search seeded with the best of a greedy
                         construction and both baselines, so it never loses
                         to either; deterministic for a fixed seed.
* ``solve_baseline``  -- "spf" takes the fewest-hop path to the nearest
                         feasible server with shifts still optimized
                         per-demand; "noshape" searches paths freely but
                         pins every optional shift to one cycle.
* ``brute_force_oracle`` -- exhaustive branch-and-bound over the same
                         configuration space; provably objective-optimal at
                         desk scale, refuses larger instances.

``validate_plan`` re-derives every constraint from scratch and is the only
arbiter of plan feasibility in tests.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass
from random import Random
from typing import Iterable, Sequence

from .latency import LatencyReport, ShiftVector, accumulated_delay, check_deadline
from .ledger import CycleLedger, LedgerError, ReservationHandle
from .netmodel import Demand, NetworkGraph, NodeKind, RBGrid, SPath, Violation, enumerate_spaths
from .timefabric import ClockMap, Domain, TimingConfig, map_cycle, mapping_delay

NS_PER_S = 1_000_000_000


@dataclass(frozen=True)
class TabuConfig:
    tenure: int = 20
    max_iterations: int = 5000
    neighborhood: int = 64
    seed: int = 0
    time_budget_s: float | None = None
    paths_per_server: int = 16
    stall_limit: int | None = 600  # stop after this many non-improving iterations

    def __post_init__(self) -> None:
        if min(self.tenure, self.max_iterations, self.neighborhood, self.paths_per_server) < 1:
            raise ValueError("TabuConfig fields must be positive")
        if self.stall_limit is not None and self.stall_limit < 1:
            raise ValueError("stall_limit must be positive or None")


@dataclass(frozen=True)
class OracleLimits:
    max_demands: int = 6
    max_nodes: int = 8
    max_paths: int = 4
    max_queue_count: int = 5


class InstanceTooLarge(RuntimeError):
    """The exact solver refuses instances beyond its enumeration budget."""


@dataclass(frozen=True)
class DemandPlan:
    demand_id: str
    accepted: bool
    path: SPath | None = None
    rb_cells: tuple[tuple[int, int], ...] = ()
    shifts: ShiftVector | None = None
    report: LatencyReport | None = None


@dataclass(frozen=True)
class SchedulePlan:
    demands: tuple[DemandPlan, ...]
    objective: int
    solver: str = ""

    @property
    def total_bound_ns(self) -> int:
        return sum(dp.report.bound_ns for dp in self.demands if dp.accepted)

    def by_id(self) -> dict[str, DemandPlan]:
        return {dp.demand_id: dp for dp in self.demands}


@dataclass(frozen=True)
class _Placement:
    path: SPath
    offset: int
    cells: tuple[tuple[int, int], ...]
    shifts: ShiftVector
    cycles: tuple[int, ...]
    bound: int  # end-to-end bound in ns; the official recursion re-derives it


class _Context:
    """Immutable instance data plus one working ledger."""

    def __init__(
        self,
        demands: Sequence[Demand],
        graph: NetworkGraph,
        grid: RBGrid,
        timing: TimingConfig,
        clocks: ClockMap,
        max_hops: int,
        paths_per_server: int,
    ):
        self.demands = list(demands)
        self.graph = graph
        self.timing = timing
        self.clocks = clocks
        self.max_hops = max_hops
        self.paths: dict[str, list[SPath]] = {
            d.id: enumerate_spaths(graph, d, max_hops, k=paths_per_server) for d in demands
        }
        self.grid = copy.deepcopy(grid)
        self.ledger = CycleLedger(graph, timing, self.grid)
        self.fill_order = sorted(self.demands, key=lambda d: (d.deadline_ns, d.id))
        self.ran = timing.tag(Domain.RAN)
        self.wn = timing.tag(Domain.WN)
        self.mecs = timing.tag(Domain.MECS)
        # (demand, path, r0, r_ap) -> hop walk; pure arithmetic, state-free
        self.prefix_cache: dict[tuple, tuple] = {}

    def path_delay(self, path: SPath) -> int:
        return sum(self.graph.link(u, v).delay_ns for u, v in path.wired_pairs())


class _SearchState:
    """Current (always feasible) assignment: placements plus live ledger."""

    def __init__(self, ctx: _Context):
        self.ctx = ctx
        self.place: dict[str, _Placement | None] = {d.id: None for d in ctx.demands}
        self.handles: dict[str, ReservationHandle] = {}
        self.objective = 0
        self.total_bound = 0
        self.version = 0  # bumps on every commit/release, gates the fail memo
        self._fail_at: dict[str, int] = {}

    def snapshot(self) -> dict[str, _Placement | None]:
        return dict(self.place)

    def remove(self, demand_id: str) -> _Placement:
        pl = self.place[demand_id]
        assert pl is not None
        self.ctx.ledger.release(self.handles.pop(demand_id))
        self.place[demand_id] = None
        self.objective -= 1
        self.total_bound -= pl.bound
        self.version += 1
        return pl

    def _commit(self, demand: Demand, pl: _Placement) -> None:
        handle = self.ctx.ledger.try_reserve(
            demand, pl.path, pl.shifts, pl.cells, pl.cycles
        )
        self.place[demand.id] = pl
        self.handles[demand.id] = handle
        self.objective += 1
        self.total_bound += pl.bound
        self.version += 1

    def insert_placement(self, demand: Demand, pl: _Placement) -> bool:
        """Re-commit a previously valid placement. Used for undo/replay."""
        try:
            self._commit(demand, pl)
        except LedgerError:
            return False
        return True

    def clear(self) -> None:
        for did in list(self.handles):
            self.remove(did)

    def restore(self, snap: dict[str, _Placement | None]) -> None:
        self.clear()
        byid = {d.id: d for d in self.ctx.demands}
        for did, pl in snap.items():
            if pl is not None:
                ok = self.insert_placement(byid[did], pl)
                assert ok, "snapshot replay must succeed"

    # -- placement search ---------------------------------------------------

    def _rb_fill(self, demand: Demand, offset: int):
        """Canonical radio fill for a window starting ``offset`` TTIs after
        arrival: earliest free TTIs, lowest bands first, stop at payload."""
        grid = self.ctx.grid
        n_tti = self.ctx.timing.n_tti
        cells: list[tuple[int, int]] = []
        total = 0
        first_s = last_s = None
        for s in range(offset + 1, n_tti):
            tti = (demand.arrival_tti + s) % n_tti
            for band in grid.free_bands(tti):
                cells.append((tti, band))
                total += grid.cap((tti, band))
                if first_s is None:
                    first_s = s
                last_s = s
                if total >= demand.payload_bits:
                    break
            if total >= demand.payload_bits:
                break
        if total < demand.payload_bits:
            return None
        return first_s - 1, last_s - first_s + 1, tuple(cells)

    def _prefix(self, demand: Demand, path: SPath, r0: int, r_ap: int):
        """Cycles and accumulated delay up to (and including) the last
        forwarding hop, plus the server-arrival mapping."""
        ctx = self.ctx
        key = (demand.id, path.nodes, r0, r_ap)
        hit = ctx.prefix_cache.get(key)
        if hit is not None:
            return hit
        t = ctx.timing
        nodes = path.nodes
        c0 = (demand.arrival_tti + r0) % t.n_tti
        tau_int = ctx.clocks.tau_ap_internal(nodes[1])
        phi_ap = mapping_delay(c0, ctx.ran, ctx.wn, 0, tau_int)
        c = (map_cycle(c0, ctx.ran, ctx.wn, 0, tau_int) + r_ap) % t.n_dip
        delta = (1 + r0) * t.delta_tti + phi_ap + r_ap * t.delta_dip
        dip_cycles = [c]
        for i in range(2, path.hop_count):
            u, v = nodes[i - 1], nodes[i]
            tau = ctx.graph.link(u, v).delay_ns
            off = ctx.clocks.tau_hc(u, Domain.WN, v, Domain.WN)
            delta += mapping_delay(c, ctx.wn, ctx.wn, tau, off) + t.delta_dip
            c = (map_cycle(c, ctx.wn, ctx.wn, tau, off) + 1) % t.n_dip
            dip_cycles.append(c)
        u, v = nodes[-2], nodes[-1]
        tau = ctx.graph.link(u, v).delay_ns
        off = ctx.clocks.tau_hc(u, Domain.WN, v, Domain.MECS)
        arrival = map_cycle(c, ctx.wn, ctx.mecs, tau, off)
        phi_srv = mapping_delay(c, ctx.wn, ctx.mecs, tau, off)
        out = (tuple(dip_cycles), delta, arrival, phi_srv)
        ctx.prefix_cache[key] = out
        return out

    def _links_fit(self, demand: Demand, path: SPath, dip_cycles: Sequence[int]) -> bool:
        ctx = self.ctx
        load = ctx.ledger.link_load
        for i, (u, v) in enumerate(path.wired_pairs()):
            link = ctx.graph.link(u, v)
            new = load.get(((u, v), dip_cycles[i]), 0) + demand.payload_bits
            if new * NS_PER_S > link.bandwidth_bps * ctx.timing.delta_dip:
                return False
        return True

    def _finish(
        self,
        demand: Demand,
        path: SPath,
        offset: int,
        fill,
        r_ap: int,
        r_server: int,
        bound: int,
        cycles: tuple[int, ...],
    ) -> _Placement:
        breve, hat, cells = fill
        shifts = ShiftVector(breve, hat, r_ap, r_server)
        pl = _Placement(path, offset, cells, shifts, cycles, bound)
        self._commit(demand, pl)
        return pl

    def try_place(
        self,
        demand: Demand,
        paths: Sequence[SPath] | None = None,
        offsets: Iterable[int] | None = None,
        r_aps: Iterable[int] | None = None,
        r_servers: Iterable[int] | None = None,
        use_memo: bool = False,
    ) -> _Placement | None:
        """First feasible placement in scan order, committed to the ledger.

        Scan order: paths as given (default: ascending wired delay), then
        window offset, AP shift, server shift, all ascending, which realizes
        the lowest-latency configuration the current ledger admits.
        """
        if use_memo and self._fail_at.get(demand.id) == self.version:
            return None
        full = paths is None and offsets is None and r_aps is None and r_servers is None
        found = next(self._scan(demand, paths, offsets, r_aps, r_servers), None)
        if found is None:
            if full:
                self._fail_at[demand.id] = self.version
            return None
        return self._finish(demand, *found)

    def _scan(
        self,
        demand: Demand,
        paths: Sequence[SPath] | None = None,
        offsets: Iterable[int] | None = None,
        r_aps: Iterable[int] | None = None,
        r_servers: Iterable[int] | None = None,
    ):
        """Yield every feasible (path, offset, fill, r_ap, r_server, bound)
        against the current ledger, in scan order, without committing.

        Safe to resume after a commit/release pair that restores the ledger
        exactly (the exhaustive solver leans on this).
        """
        ctx = self.ctx
        limit = ctx.timing.shift_limit
        paths = ctx.paths[demand.id] if paths is None else paths
        offsets = range(ctx.timing.n_tti - 1) if offsets is None else tuple(offsets)
        r_aps = range(1, limit + 1) if r_aps is None else tuple(r_aps)
        r_servers = range(1, limit + 1) if r_servers is None else tuple(r_servers)
        t = ctx.timing
        work = demand.payload_bits * ctx.graph.kappa
        for path in paths:
            budget = ctx.graph.server_rate[path.server] * t.delta_mec
            for offset in offsets:
                fill = self._rb_fill(demand, offset)
                if fill is None:
                    break  # later windows see a subset of these TTIs
                r0 = fill[0] + fill[1]
                for r_ap in r_aps:
                    if not 1 <= r_ap <= limit:
                        continue
                    dip_cycles, delta, arrival, phi_srv = self._prefix(demand, path, r0, r_ap)
                    if delta + phi_srv + t.delta_mec > demand.deadline_ns:
                        break  # delay is non-decreasing in r_ap
                    if not self._links_fit(demand, path, dip_cycles):
                        continue
                    for r_server in r_servers:
                        if not 1 <= r_server <= limit:
                            continue
                        bound = delta + phi_srv + r_server * t.delta_mec
                        if bound > demand.deadline_ns:
                            break
                        mcyc = (arrival + r_server) % t.n_mec
                        held = ctx.ledger.server_load.get((path.server, mcyc), 0)
                        if (held + work) * NS_PER_S > budget:
                            continue
                        cycles = ((demand.arrival_tti + r0) % t.n_tti, *dip_cycles, mcyc)
                        yield path, offset, fill, r_ap, r_server, bound, cycles

    def can_place(self, demand: Demand) -> bool:
        """Read-only feasibility probe against the current ledger."""
        return next(self._scan(demand), None) is not None


def _fill_pass(state: _SearchState, skip: set[str] | None = None) -> None:
    for d in state.ctx.fill_order:
        if state.place[d.id] is None and (skip is None or d.id not in skip):
            state.try_place(d, use_memo=True)


def _spf_paths(ctx: _Context, demand: Demand) -> list[SPath]:
    return sorted(ctx.paths[demand.id], key=lambda p: (p.hop_count, ctx.path_delay(p), p.nodes))


def _construct(state: _SearchState, kind: str) -> None:
    """Build a feasible assignment from an empty state, in input order for
    the baselines and deadline order for the greedy seed."""
    ctx = state.ctx
    if kind == "greedy":
        for d in ctx.fill_order:
            state.try_place(d)
    elif kind == "spf":
        for d in ctx.demands:
            state.try_place(d, paths=_spf_paths(ctx, d))
    elif kind == "noshape":
        for d in ctx.demands:
            state.try_place(d, offsets=(0,), r_aps=(1,), r_servers=(1,))
    else:
        raise ValueError(f"unknown construction {kind}")


def _replay(state: _SearchState, plan: SchedulePlan) -> None:
    """Best-effort warm start from a previous plan (e.g. a smaller hop cap)."""
    byplan = plan.by_id()
    for d in state.ctx.demands:
        dp = byplan.get(d.id)
        if dp is None or not dp.accepted:
            continue
        if dp.path.hop_count > state.ctx.max_hops:
            continue
        try:
            report = accumulated_delay(
                d, dp.path, dp.shifts, state.ctx.timing, state.ctx.clocks, state.ctx.graph
            )
        except (ValueError, KeyError):
            continue
        if not check_deadline(report, d):
            continue
        pl = _Placement(
            dp.path, dp.shifts.breve_r0, dp.rb_cells, dp.shifts,
            tuple(report.cycles), report.bound_ns,
        )
        state.insert_placement(d, pl)


def _build_plan(state: _SearchState, solver: str) -> SchedulePlan:
    ctx = state.ctx
    plans = []
    for d in ctx.demands:
        pl = state.place[d.id]
        if pl is None:
            plans.append(DemandPlan(d.id, False))
        else:
            # independent re-derivation of what the fast scan promised
            report = accumulated_delay(d, pl.path, pl.shifts, ctx.timing, ctx.clocks, ctx.graph)
            assert report.bound_ns == pl.bound and report.cycles == pl.cycles, (
                "fast scan disagrees with the delay recursion"
            )
            plans.append(DemandPlan(d.id, True, pl.path, pl.cells, pl.shifts, report))
    return SchedulePlan(tuple(plans), state.objective, solver)


def solve_baseline(
    kind: str,
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    max_hops: int,
    paths_per_server: int = 16,
) -> SchedulePlan:
    """The two reference strategies: ``spf`` (shortest path first) and
    ``noshape`` (free path choice, all optional shifts pinned to 1)."""
    if kind not in ("spf", "noshape"):
        raise ValueError("baseline kind must be 'spf' or 'noshape'")
    ctx = _Context(demands, graph, grid, timing, clocks, max_hops, paths_per_server)
    state = _SearchState(ctx)
    _construct(state, kind)
    return _build_plan(state, kind)


@dataclass(frozen=True)
class _Move:
    kind: str  # toggle | path | r_ap | r_server | window
    demand_id: str
    arg: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.demand_id, self.kind)


def _apply_move(state: _SearchState, demand: Demand, move: _Move):
    """Perform the move. Returns (feasible, undo_token) where the token
    replays the exact inverse."""
    held = state.place[demand.id]
    if move.kind == "toggle":
        if held is not None:
            state.remove(demand.id)
            return True, ("insert", held)
        pl = state.try_place(demand, use_memo=True)
        if pl is None:
            return False, None
        return True, ("remove",)
    if held is None:
        return False, None
    old = state.remove(demand.id)
    if move.kind == "path":
        cands = state.ctx.paths[demand.id]
        target = cands[move.arg % len(cands)]
        if target.nodes == old.path.nodes:
            pl = None
        else:
            pl = state.try_place(demand, paths=[target])
    elif move.kind == "r_ap":
        r = old.shifts.r_ap + move.arg
        pl = state.try_place(
            demand, paths=[old.path], offsets=(old.offset,), r_aps=(r,)
        )
    elif move.kind == "r_server":
        r = old.shifts.r_server + move.arg
        pl = state.try_place(
            demand, paths=[old.path], offsets=(old.offset,), r_servers=(r,)
        )
    elif move.kind == "window":
        off = old.offset + move.arg
        if 0 <= off < state.ctx.timing.n_tti - 1:
            pl = state.try_place(demand, paths=[old.path], offsets=(off,))
        else:
            pl = None
    else:
        raise ValueError(move.kind)
    if pl is None:
        ok = state.insert_placement(demand, old)
        assert ok
        return False, None
    return True, ("swap", old)


def _undo_move(state: _SearchState, demand: Demand, token) -> None:
    if token[0] == "insert":
        ok = state.insert_placement(demand, token[1])
    elif token[0] == "remove":
        state.remove(demand.id)
        ok = True
    else:  # swap: drop the new placement, restore the old one
        state.remove(demand.id)
        ok = state.insert_placement(demand, token[1])
    assert ok, "undo must restore the previous state"


def solve_tabu(
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    max_hops: int,
    cfg: TabuConfig = TabuConfig(),
    warm_start: SchedulePlan | None = None,
) -> SchedulePlan:
    """Tabu local search over the per-demand configuration space.

    Seeded with the best of a greedy construction, both baselines, and an
    optional warm-start plan, so its objective can never fall below any of
    them. Moves toggle admission, swap the path, nudge the AP or server
    shift, or slide the radio window; a (demand, move kind) pair that was
    just applied is tabu for ``cfg.tenure`` iterations unless it would beat
    the incumbent. Fully deterministic for a fixed seed.
    """
    ctx = _Context(demands, graph, grid, timing, clocks, max_hops, cfg.paths_per_server)
    state = _SearchState(ctx)
    n = len(ctx.demands)
    byid = {d.id: d for d in ctx.demands}

    best_snap: dict[str, _Placement | None] = state.snapshot()
    best_key = (-1, 0)
    for seed_kind in ("greedy", "spf", "noshape", "warm"):
        if seed_kind == "warm":
            if warm_start is None:
                continue
            _replay(state, warm_start)
            _fill_pass(state)
        else:
            _construct(state, seed_kind)
        key = (state.objective, -state.total_bound)
        if key > best_key:
            best_key, best_snap = key, state.snapshot()
        state.clear()
    state.restore(best_snap)

    if n == 0:
        return _build_plan(state, "tabu")

    rng = Random(cfg.seed)
    kinds = ("toggle", "path", "r_ap", "r_server", "window")
    tabu: dict[tuple[str, str], int] = {}
    deadline = None if cfg.time_budget_s is None else time.monotonic() + cfg.time_budget_s
    last_improve = 0

    for it in range(cfg.max_iterations):
        if best_key[0] == n:
            break
        if deadline is not None and time.monotonic() > deadline:
            break
        if cfg.stall_limit is not None and it - last_improve > cfg.stall_limit:
            break
        base_obj, base_bound = state.objective, state.total_bound
        chosen = None
        chosen_score = None
        for _ in range(cfg.neighborhood):
            d = ctx.demands[rng.randrange(n)]
            kind = kinds[rng.randrange(len(kinds))]
            if kind == "path":
                move = _Move(kind, d.id, rng.randrange(max(1, len(ctx.paths[d.id]))))
            elif kind == "toggle":
                move = _Move(kind, d.id)
            else:
                move = _Move(kind, d.id, rng.randrange(2) * 2 - 1)
            feasible, token = _apply_move(state, d, move)
            if not feasible:
                continue
            score = (state.objective - base_obj, base_bound - state.total_bound)
            obj_after = state.objective
            _undo_move(state, d, token)
            if tabu.get(move.key, -1) >= it and obj_after <= best_key[0]:
                continue
            if chosen_score is None or score > chosen_score:
                chosen, chosen_score = move, score
        if chosen is None:
            continue
        feasible, _token = _apply_move(state, byid[chosen.demand_id], chosen)
        assert feasible, "re-applying an evaluated move must succeed"
        tabu[chosen.key] = it + cfg.tenure
        _fill_pass(state, skip={
            did for (did, k), exp in tabu.items() if k == "toggle" and exp >= it
        })
        key = (state.objective, -state.total_bound)
        if key > best_key:
            best_key, best_snap = key, state.snapshot()
            last_improve = it

    state.restore(best_snap)
    return _build_plan(state, "tabu")


def brute_force_oracle(
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    max_hops: int,
    limits: OracleLimits = OracleLimits(),
) -> SchedulePlan:
    """Branch-and-bound enumeration of admission x path x window x shifts.

    Provably objective-optimal over the shared configuration space; among
    equal-objective plans the first one found in scan order is returned.
    Refuses instances beyond ``limits`` (too many demands, nodes, candidate
    paths, or queues) rather than running forever.
    """
    if len(demands) > limits.max_demands:
        raise InstanceTooLarge(f"{len(demands)} demands > {limits.max_demands}")
    if len(graph.nodes) > limits.max_nodes:
        raise InstanceTooLarge(f"{len(graph.nodes)} nodes > {limits.max_nodes}")
    if timing.queue_count > limits.max_queue_count:
        raise InstanceTooLarge(f"Q={timing.queue_count} > {limits.max_queue_count}")
    ctx = _Context(demands, graph, grid, timing, clocks, max_hops, limits.max_paths + 1)
    for d in ctx.demands:
        if len(ctx.paths[d.id]) > limits.max_paths:
            raise InstanceTooLarge(
                f"demand {d.id} has {len(ctx.paths[d.id])} candidate paths > {limits.max_paths}"
            )
    state = _SearchState(ctx)
    n = len(ctx.demands)

    # start from the greedy assignment so the search only has to prove
    # optimality (or beat it), and branch on the most constrained demands
    # first so conflicts surface near the root
    _construct(state, "greedy")
    best = {"key": (state.objective, -state.total_bound), "snap": state.snapshot()}
    state.clear()

    # Commits only ever add load, so a demand with no feasible placement at
    # some node has none anywhere below it either: rejecting it there is
    # lossless. Branching on the demand with the fewest feasible placements
    # surfaces conflicts closest to the root.
    def rec(remaining: list[Demand], acc: int) -> None:
        if best["key"][0] >= n:
            return
        if acc + len(remaining) <= best["key"][0]:
            return  # cannot beat the incumbent even if all the rest fit
        if not remaining:
            key = (acc, -state.total_bound)
            if key[0] > best["key"][0]:
                best["key"], best["snap"] = key, state.snapshot()
            return
        counts = sorted(
            (sum(1 for _ in state._scan(d)), d.id, d) for d in remaining
        )
        placeable = [d for cnt, _did, d in counts if cnt > 0]
        if len(placeable) < len(remaining):
            rec(placeable, acc)  # the rest are forced rejections
            return
        d = counts[0][2]
        rest = [x for x in remaining if x.id != d.id]
        for combo in state._scan(d):
            state._finish(d, *combo)
            rec(rest, acc + 1)
            state.remove(d.id)
            if best["key"][0] >= n:
                return
        rec(rest, acc)  # rejecting a placeable demand, in case it blocks others

    rec(list(ctx.demands), 0)
    state.restore(best["snap"])
    return _build_plan(state, "oracle")


def validate_plan(
    plan: SchedulePlan,
    demands: Sequence[Demand],
    graph: NetworkGraph,
    grid: RBGrid,
    timing: TimingConfig,
    clocks: ClockMap,
    max_hops: int,
) -> list[Violation]:
    """Recompute every constraint from scratch; [] means the plan is feasible.

    Deliberately independent of the ledger's incremental bookkeeping: all
    per-cycle sums are rebuilt here from the plan alone.
    """
    out: list[Violation] = []
    byid = {d.id: d for d in demands}
    rb_owner: dict[tuple[int, int], str] = {}
    link_sum: dict[tuple[tuple[str, str], int], int] = {}
    server_sum: dict[tuple[str, int], int] = {}

    for dp in plan.demands:
        d = byid.get(dp.demand_id)
        if d is None:
            out.append(Violation("unknown-demand", dp.demand_id))
            continue
        if not dp.accepted:
            if dp.path is not None or dp.rb_cells or dp.shifts is not None:
                out.append(Violation("rejected-with-reservation", dp.demand_id))
            continue
        path, shifts = dp.path, dp.shifts
        if path is None or shifts is None or dp.report is None:
            out.append(Violation("missing-assignment", dp.demand_id))
            continue
        if path.hop_count > max_hops:
            out.append(Violation("hop-bound", dp.demand_id, f"{path.hop_count} > {max_hops}"))
        if path.device != d.source or path.ap != graph.ap_of(d.source):
            out.append(Violation("bad-path", dp.demand_id, "wrong endpoints"))
            continue
        if graph.kind(path.server) is not NodeKind.SERVER:
            out.append(Violation("bad-path", dp.demand_id, "path does not end at a server"))
            continue
        missing = [f"{u}->{v}" for u, v in path.wired_pairs() if (u, v) not in graph.links]
        if missing:
            out.append(Violation("bad-path", dp.demand_id, f"missing links {missing}"))
            continue
        try:
            shifts.check(timing)
        except ValueError as exc:
            out.append(Violation("bad-shift", dp.demand_id, str(exc)))
            continue
        report = accumulated_delay(d, path, shifts, timing, clocks, graph)
        if report.cycles != dp.report.cycles or report.deltas != dp.report.deltas:
            out.append(Violation("report-mismatch", dp.demand_id))
        if report.bound_ns > d.deadline_ns:
            out.append(Violation("deadline-miss", dp.demand_id,
                                 f"{report.bound_ns} > {d.deadline_ns}"))
        window = {
            (d.arrival_tti + k) % timing.n_tti
            for k in range(shifts.breve_r0, shifts.r0 + 1)
        }
        cap = 0
        for cell in dp.rb_cells:
            if cell not in grid.capacity:
                out.append(Violation("rb-unknown", dp.demand_id, str(cell)))
                continue
            if cell[0] not in window:
                out.append(Violation("rb-window", dp.demand_id, str(cell)))
            owner = rb_owner.get(cell)
            if owner is not None:
                out.append(Violation("rb-conflict", dp.demand_id, f"{cell} also {owner}"))
            rb_owner[cell] = dp.demand_id
            cap += grid.capacity[cell]
        if cap < d.payload_bits:
            out.append(Violation("rb-capacity-short", dp.demand_id,
                                 f"{cap} < {d.payload_bits}"))
        for i, (u, v) in enumerate(path.wired_pairs(), start=1):
            key = ((u, v), report.cycles[i] % timing.n_dip)
            link_sum[key] = link_sum.get(key, 0) + d.payload_bits
        skey = (path.server, report.cycles[-1] % timing.n_mec)
        server_sum[skey] = server_sum.get(skey, 0) + d.payload_bits * graph.kappa

    for ((u, v), cyc), bits in sorted(link_sum.items()):
        link = graph.links[(u, v)]
        if bits * NS_PER_S > link.bandwidth_bps * timing.delta_dip:
            out.append(Violation("link-overflow", f"{u}->{v}", f"cycle {cyc}: {bits} bits"))
    for (srv, cyc), work in sorted(server_sum.items()):
        if work * NS_PER_S > graph.server_rate[srv] * timing.delta_mec:
            out.append(Violation("server-overflow", srv, f"cycle {cyc}: {work} cycles"))
    return out
