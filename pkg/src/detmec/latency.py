"""Per-demand emission cycles, worst-case accumulated delay, deadline check.

The emission recursion and the delay recursion share one walk over the path:
device buffers and transmits over the air (r_0 TTIs total), the AP maps the
radio cycle into its forwarding clock and may shift by r_ap cycles, interior
routers always shift by exactly one forwarding cycle, and the server maps
into its computation clock and may shift by r_server cycles. The resulting
end-to-end figure is a worst case; the simulator checks it is never exceeded
and is tight up to one TTI plus one computation cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .netmodel import Demand, NetworkGraph, SPath
from .timefabric import ClockMap, Domain, TimingConfig, map_cycle, mapping_delay


@dataclass(frozen=True)
class ShiftVector:
    """Cycle shifts for one demand.

    * ``breve_r0``: buffering TTIs before the radio transmission starts
    * ``hat_r0``: TTIs of radio transmission (derived from the RB assignment)
    * ``r_ap``: forwarding-cycle shift at the AP egress
    * ``r_server``: computation-cycle shift at the server

    Interior routers are not represented: their shift is fixed at one cycle.
    """

    breve_r0: int
    hat_r0: int
    r_ap: int
    r_server: int

    @property
    def r0(self) -> int:
        return self.breve_r0 + self.hat_r0

    def check(self, timing: TimingConfig) -> None:
        limit = timing.shift_limit
        if self.breve_r0 < 0:
            raise ValueError("breve_r0 must be >= 0")
        if self.hat_r0 < 1:
            raise ValueError("hat_r0 must be >= 1")
        if self.r0 + 1 > timing.n_tti:
            raise ValueError("radio window longer than the TTI ring")
        if not 1 <= self.r_ap <= limit:
            raise ValueError(f"r_ap must be in [1, {limit}]")
        if not 1 <= self.r_server <= limit:
            raise ValueError(f"r_server must be in [1, {limit}]")

    def full(self, hop_count: int) -> tuple[int, ...]:
        """Explicit (r_0 .. r_{|p|}) vector for a path of ``hop_count`` hops."""
        interior = (1,) * (hop_count - 2)
        return (self.r0, self.r_ap) + interior + (self.r_server,)


@dataclass(frozen=True)
class LatencyReport:
    """Emission cycles and accumulated worst-case delays along one path.

    ``cycles[i]`` is c_i (the cycle in which node v_i re-emits, or for i=0
    the TTI of the last occupied RB); ``deltas[i-1]`` is the accumulated
    worst-case delay through node v_i, measured from the start of the
    arrival TTI. ``bound_ns`` is the end-to-end worst case and
    ``jitter_bound_ns`` the analytic jitter cap (one TTI + one computation
    cycle).
    """

    demand_id: str
    cycles: tuple[int, ...]
    deltas: tuple[int, ...]
    jitter_bound_ns: int

    def __post_init__(self) -> None:
        if len(self.cycles) != len(self.deltas) + 1:
            raise ValueError("need one delay per hop")
        for a, b in zip(self.deltas, self.deltas[1:]):
            if b <= a:
                raise ValueError("accumulated delays must strictly increase")

    @property
    def bound_ns(self) -> int:
        return self.deltas[-1]


def jitter_bound(timing: TimingConfig) -> int:
    """Analytic cap on max-min service latency for any admitted demand."""
    return timing.delta_tti + timing.delta_mec


def _hop_maps(
    demand: Demand,
    path: SPath,
    shifts: ShiftVector,
    timing: TimingConfig,
    clocks: ClockMap,
    graph: NetworkGraph,
) -> tuple[list[int], list[int]]:
    """Shared walk: returns (cycles c_0..c_|p|, per-hop mapping delays)."""
    shifts.check(timing)
    ran = timing.tag(Domain.RAN)
    wn = timing.tag(Domain.WN)
    mecs = timing.tag(Domain.MECS)
    nodes = path.nodes
    p = path.hop_count

    cycles = [(demand.arrival_tti + shifts.r0) % timing.n_tti]
    phis = [0]  # device->AP air hop: synchronized, zero delay
    # AP internal radio->forwarding handoff, then the r_ap shift
    tau_int = clocks.tau_ap_internal(nodes[1])
    m = map_cycle(cycles[0], ran, wn, 0, tau_int)
    phis.append(mapping_delay(cycles[0], ran, wn, 0, tau_int))
    cycles.append((m + shifts.r_ap) % timing.n_dip)
    for i in range(2, p):
        up, down = nodes[i - 1], nodes[i]
        tau = graph.link(up, down).delay_ns
        off = clocks.tau_hc(up, Domain.WN, down, Domain.WN)
        phis.append(mapping_delay(cycles[-1], wn, wn, tau, off))
        cycles.append((map_cycle(cycles[-1], wn, wn, tau, off) + 1) % timing.n_dip)
    up, down = nodes[p - 1], nodes[p]
    tau = graph.link(up, down).delay_ns
    off = clocks.tau_hc(up, Domain.WN, down, Domain.MECS)
    phis.append(mapping_delay(cycles[-1], wn, mecs, tau, off))
    cycles.append((map_cycle(cycles[-1], wn, mecs, tau, off) + shifts.r_server) % timing.n_mec)
    return cycles, phis


def emission_cycles(
    demand: Demand,
    path: SPath,
    shifts: ShiftVector,
    timing: TimingConfig,
    clocks: ClockMap,
    graph: NetworkGraph,
) -> list[int]:
    """c_0 .. c_|p|: the cycle in which each node along the path re-emits.

    c_0 is a TTI index, c_1 .. c_{|p|-1} forwarding-cycle indices, c_|p| the
    computation cycle in which the server finishes the task.
    """
    cycles, _ = _hop_maps(demand, path, shifts, timing, clocks, graph)
    return cycles


def accumulated_delay(
    demand: Demand,
    path: SPath,
    shifts: ShiftVector,
    timing: TimingConfig,
    clocks: ClockMap,
    graph: NetworkGraph,
) -> LatencyReport:
    """Worst-case accumulated delay through each hop, from the arrival TTI.

    The first hop pays the full buffering-plus-transmission window, the
    radio-to-forwarding handoff wait, and the AP shift; each interior hop
    adds its mapping wait plus one forwarding cycle; the server hop adds its
    mapping wait plus r_server computation cycles. The final figure is the
    interval from the start of the arrival TTI to the end of the server's
    finishing cycle.
    """
    cycles, phis = _hop_maps(demand, path, shifts, timing, clocks, graph)
    p = path.hop_count
    deltas = [(1 + shifts.r0) * timing.delta_tti + phis[1] + shifts.r_ap * timing.delta_dip]
    for i in range(2, p):
        deltas.append(deltas[-1] + phis[i] + timing.delta_dip)
    deltas.append(deltas[-1] + phis[p] + shifts.r_server * timing.delta_mec)
    return LatencyReport(
        demand_id=demand.id,
        cycles=tuple(cycles),
        deltas=tuple(deltas),
        jitter_bound_ns=jitter_bound(timing),
    )


def check_deadline(report: LatencyReport, demand: Demand) -> bool:
    """True when the worst-case bound meets the deadline (non-strict)."""
    return report.bound_ns <= demand.deadline_ns
