"""Transactional per-cycle resource accounting for RBs, links, and servers.

One hypercycle of state is enough: every admitted demand repeats its load
pattern identically each hypercycle. Loads are pulses, a demand deposits its
whole payload into exactly one forwarding cycle per wired link and its whole
CPU work into one computation cycle. Budget checks cross-multiply integers
(bits * ns_per_s vs bps * cycle_ns) so a load exactly at budget passes and
one bit over fails, with no float rounding anywhere.

Mutations are single-writer: the scheduler owns the ledger and serializes
reserve/release; readers may take deep-copied snapshots.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

from .latency import ShiftVector
from .netmodel import Demand, NetworkGraph, RBConflictError, RBGrid, SPath, rb_window_capacity
from .timefabric import TimingConfig

NS_PER_S = 1_000_000_000


class LedgerError(Exception):
    """Reservation failure or misuse; ``code`` is machine-readable."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class ReservationHandle:
    token: int
    demand_id: str


@dataclass(frozen=True)
class _Reservation:
    demand_id: str
    rb_cells: tuple[tuple[int, int], ...]
    link_incr: tuple[tuple[tuple[str, str], int, int], ...]  # (link, cycle, bits)
    server_incr: tuple[str, int, int]  # (server, cycle, cpu_cycles)


@dataclass
class CycleLedger:
    """Reserved load per (link, forwarding cycle) and (server, computation
    cycle), plus RB occupancy delegated to the grid."""

    graph: NetworkGraph
    timing: TimingConfig
    grid: RBGrid
    link_load: dict[tuple[tuple[str, str], int], int] = field(default_factory=dict)
    server_load: dict[tuple[str, int], int] = field(default_factory=dict)
    _open: dict[int, _Reservation] = field(default_factory=dict)
    _next_token: int = 0

    def snapshot(self) -> "CycleLedger":
        """Deep copy for concurrent read-only evaluation."""
        return copy.deepcopy(self)

    def state(self):
        """Canonical comparable state (loads + RB occupancy)."""
        return (
            tuple(sorted(self.link_load.items())),
            tuple(sorted(self.server_load.items())),
            tuple(sorted(self.grid.occupancy.items())),
        )

    def has_open_reservation(self, demand_id: str) -> bool:
        return any(r.demand_id == demand_id for r in self._open.values())

    def try_reserve(
        self,
        demand: Demand,
        path: SPath,
        shifts: ShiftVector,
        rb_assignment: Sequence[tuple[int, int]],
        cycles: Sequence[int],
    ) -> ReservationHandle:
        """Atomically reserve every resource the demand needs, or nothing.

        ``cycles`` must be the emission cycles computed for exactly these
        shifts. Checks run in a fixed order (RB window+conflict+capacity,
        links in path order, server) so a failing demand always reports the
        same first violation. Raises LedgerError with codes rb-conflict,
        rb-capacity-short, link-overflow, or server-overflow.
        """
        if self.has_open_reservation(demand.id):
            raise LedgerError("already-reserved", demand.id)
        if len(cycles) != path.hop_count + 1:
            raise LedgerError("cycle-count-mismatch", demand.id)
        cells = tuple(sorted(rb_assignment))
        try:
            cap = rb_window_capacity(self.grid, demand, shifts.breve_r0, shifts.hat_r0, cells)
        except RBConflictError as exc:
            raise LedgerError("rb-conflict", str(exc)) from exc
        if cap < demand.payload_bits:
            raise LedgerError(
                "rb-capacity-short", f"{cap} < {demand.payload_bits} bits for {demand.id}"
            )

        link_incr = []
        for i, (u, v) in enumerate(path.wired_pairs(), start=1):
            link = self.graph.link(u, v)
            cyc = cycles[i] % self.timing.n_dip
            key = ((u, v), cyc)
            new_load = self.link_load.get(key, 0) + demand.payload_bits
            if new_load * NS_PER_S > link.bandwidth_bps * self.timing.delta_dip:
                raise LedgerError("link-overflow", f"{u}->{v} cycle {cyc}")
            link_incr.append(((u, v), cyc, demand.payload_bits))

        server = path.server
        mcyc = cycles[-1] % self.timing.n_mec
        work = demand.payload_bits * self.graph.kappa
        new_work = self.server_load.get((server, mcyc), 0) + work
        if new_work * NS_PER_S > self.graph.server_rate[server] * self.timing.delta_mec:
            raise LedgerError("server-overflow", f"{server} cycle {mcyc}")

        # all checks passed: commit
        self.grid.assign(demand.id, cells)
        for key_link, cyc, bits in link_incr:
            self.link_load[(key_link, cyc)] = self.link_load.get((key_link, cyc), 0) + bits
        self.server_load[(server, mcyc)] = new_work
        self._next_token += 1
        handle = ReservationHandle(self._next_token, demand.id)
        self._open[handle.token] = _Reservation(
            demand_id=demand.id,
            rb_cells=cells,
            link_incr=tuple(link_incr),
            server_incr=(server, mcyc, work),
        )
        return handle

    def release(self, handle: ReservationHandle) -> None:
        """Remove every increment of the reservation, restoring prior state
        bit-exactly. A handle can be released once."""
        rec = self._open.pop(handle.token, None)
        if rec is None or rec.demand_id != handle.demand_id:
            raise LedgerError("stale-handle", str(handle))
        self.grid.release(rec.demand_id, rec.rb_cells)
        for link, cyc, bits in rec.link_incr:
            key = (link, cyc)
            left = self.link_load[key] - bits
            if left:
                self.link_load[key] = left
            else:
                del self.link_load[key]
        server, mcyc, work = rec.server_incr
        left = self.server_load[(server, mcyc)] - work
        if left:
            self.server_load[(server, mcyc)] = left
        else:
            del self.server_load[(server, mcyc)]

    def utilization_profile(self) -> dict:
        """Per-cycle reserved fraction of each link and server budget, plus
        scenario-wide averages (mean over resources of mean over cycles)."""
        links = {}
        for (u, v), link in sorted(self.graph.links.items()):
            budget = link.bandwidth_bps * self.timing.delta_dip
            row = [
                self.link_load.get(((u, v), c), 0) * NS_PER_S / budget
                for c in range(self.timing.n_dip)
            ]
            links[f"{u}->{v}"] = row
        servers = {}
        for j, rate in sorted(self.graph.server_rate.items()):
            budget = rate * self.timing.delta_mec
            servers[j] = [
                self.server_load.get((j, c), 0) * NS_PER_S / budget
                for c in range(self.timing.n_mec)
            ]
        avg_link = (
            sum(sum(r) / len(r) for r in links.values()) / len(links) if links else 0.0
        )
        avg_server = (
            sum(sum(r) / len(r) for r in servers.values()) / len(servers) if servers else 0.0
        )
        return {
            "links": links,
            "servers": servers,
            "avg_link": avg_link,
            "avg_server": avg_server,
        }
