"""Network graph, radio resource-block grid, demands, and candidate paths.

Bandwidths are bits per second, server rates CPU cycles per second, delays
integer nanoseconds, payloads bits. Capacity comparisons are done by exact
integer cross-multiplication (bits * 1e9 vs bps * ns), never by float division.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .timefabric import TimingConfig

NS_PER_S = 1_000_000_000


class NodeKind(Enum):
    DEVICE = "device"
    AP = "ap"
    ROUTER = "router"
    SERVER = "server"


@dataclass(frozen=True)
class Link:
    """Directed wired link with propagation delay and line rate."""

    src: str
    dst: str
    delay_ns: int
    bandwidth_bps: int


@dataclass(frozen=True)
class Demand:
    """Periodic offloading demand: source device, period, arrival TTI within
    the hypercycle, payload size, and end-to-end deadline."""

    id: str
    source: str
    period_ns: int
    arrival_tti: int
    payload_bits: int
    deadline_ns: int


@dataclass(frozen=True)
class SPath:
    """Device -> AP -> routers -> server node sequence."""

    nodes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 3:
            raise ValueError("path needs at least device, AP, server")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("path repeats a node")

    @property
    def device(self) -> str:
        return self.nodes[0]

    @property
    def ap(self) -> str:
        return self.nodes[1]

    @property
    def server(self) -> str:
        return self.nodes[-1]

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    def wired_pairs(self) -> Iterator[tuple[str, str]]:
        """Wired hops only, i.e. everything after the device->AP air hop."""
        for i in range(1, len(self.nodes) - 1):
            yield self.nodes[i], self.nodes[i + 1]


@dataclass(frozen=True)
class Violation:
    """Machine-readable constraint violation."""

    code: str
    subject: str
    detail: str = ""


class RBConflictError(ValueError):
    """An RB assignment touches a cell owned by another demand."""


@dataclass
class NetworkGraph:
    nodes: dict[str, NodeKind]
    links: dict[tuple[str, str], Link]
    attachments: tuple[tuple[str, str], ...]  # (device, ap) pairs
    server_rate: dict[str, int]  # CPU cycles per second
    kappa: int  # CPU cycles per payload bit

    def __post_init__(self) -> None:
        self._ap_of = {}
        for dev, ap in self.attachments:
            self._ap_of.setdefault(dev, ap)
        self._out: dict[str, list[str]] = {}
        for u, v in self.links:
            self._out.setdefault(u, []).append(v)
        for vs in self._out.values():
            vs.sort()

    def kind(self, node: str) -> NodeKind:
        return self.nodes[node]

    def ap_of(self, device: str) -> str:
        return self._ap_of[device]

    def wired_neighbors(self, node: str) -> Sequence[str]:
        return self._out.get(node, ())

    def link(self, u: str, v: str) -> Link:
        return self.links[(u, v)]

    def servers(self) -> list[str]:
        return sorted(n for n, k in self.nodes.items() if k is NodeKind.SERVER)

    def devices(self) -> list[str]:
        return sorted(n for n, k in self.nodes.items() if k is NodeKind.DEVICE)

    def aps(self) -> list[str]:
        return sorted(n for n, k in self.nodes.items() if k is NodeKind.AP)

    def routers(self) -> list[str]:
        return sorted(n for n, k in self.nodes.items() if k is NodeKind.ROUTER)


@dataclass
class RBGrid:
    """One hypercycle of the global radio grid: (TTI cycle, band) cells.

    ``capacity`` is bits deliverable per cell; ``occupancy`` maps a cell to
    the demand holding it. Occupancy is mutated only through the ledger.
    """

    n_tti: int
    bands: tuple[int, ...]
    capacity: dict[tuple[int, int], int]
    occupancy: dict[tuple[int, int], str] = field(default_factory=dict)

    @classmethod
    def uniform(cls, n_tti: int, n_bands: int, bits_per_rb: int) -> "RBGrid":
        bands = tuple(range(n_bands))
        cap = {(c, f): bits_per_rb for c in range(n_tti) for f in bands}
        return cls(n_tti=n_tti, bands=bands, capacity=cap)

    def cap(self, cell: tuple[int, int]) -> int:
        return self.capacity[cell]

    def owner(self, cell: tuple[int, int]) -> str | None:
        return self.occupancy.get(cell)

    def free_bands(self, tti: int) -> list[int]:
        return [f for f in self.bands if (tti, f) not in self.occupancy]

    def assign(self, demand_id: str, cells: Iterable[tuple[int, int]]) -> None:
        cells = list(cells)
        for cell in cells:
            if cell not in self.capacity:
                raise KeyError(f"no such RB cell {cell}")
            holder = self.occupancy.get(cell)
            if holder is not None and holder != demand_id:
                raise RBConflictError(f"RB {cell} already held by {holder}")
        for cell in cells:
            self.occupancy[cell] = demand_id

    def release(self, demand_id: str, cells: Iterable[tuple[int, int]]) -> None:
        for cell in cells:
            if self.occupancy.get(cell) != demand_id:
                raise KeyError(f"RB {cell} not held by {demand_id}")
            del self.occupancy[cell]


def rb_window_capacity(
    grid: RBGrid,
    demand: Demand,
    breve_r0: int,
    hat_r0: int,
    assignment: Iterable[tuple[int, int]],
) -> int:
    """Total bits deliverable by the assigned RBs.

    The assignment must stay within the demand's declared transmission window
    ``[c + breve_r0, c + breve_r0 + hat_r0]`` (TTI indices mod the grid
    length) and must not touch cells held by other demands. The caller
    decides feasibility by comparing the returned capacity against the
    payload size.
    """
    if breve_r0 < 0 or hat_r0 < 1:
        raise ValueError("need breve_r0 >= 0 and hat_r0 >= 1")
    r0 = breve_r0 + hat_r0
    window = {(demand.arrival_tti + k) % grid.n_tti for k in range(breve_r0, r0 + 1)}
    total = 0
    for cell in assignment:
        tti, _band = cell
        if tti not in window:
            raise ValueError(f"RB {cell} outside window of demand {demand.id}")
        holder = grid.occupancy.get(cell)
        if holder is not None and holder != demand.id:
            raise RBConflictError(f"RB {cell} already held by {holder}")
        total += grid.capacity[cell]
    return total


def enumerate_spaths(
    graph: NetworkGraph, demand: Demand, max_hops: int, k: int = 16
) -> list[SPath]:
    """Loop-free device->server candidate paths of at most ``max_hops`` hops.

    Keeps up to ``k`` lowest-delay paths per reachable server, so no server is
    starved of candidates by a closer one. Result is sorted by (total wired
    delay, node sequence) for deterministic downstream iteration.
    """
    if max_hops < 2:
        raise ValueError("max_hops must be at least 2")
    device = demand.source
    ap = graph.ap_of(device)
    found: dict[str, list[tuple[int, tuple[str, ...]]]] = {}

    def walk(node: str, visited: tuple[str, ...], delay: int) -> None:
        # hop count so far = len(visited) - 1 (includes the air hop)
        if graph.kind(node) is NodeKind.SERVER:
            found.setdefault(node, []).append((delay, visited))
            return
        if len(visited) - 1 >= max_hops:
            return
        for nxt in graph.wired_neighbors(node):
            if nxt in visited:
                continue
            kind = graph.kind(nxt)
            if kind is NodeKind.DEVICE or kind is NodeKind.AP:
                continue
            walk(nxt, visited + (nxt,), delay + graph.link(node, nxt).delay_ns)

    walk(ap, (device, ap), 0)
    chosen: list[tuple[int, tuple[str, ...]]] = []
    for server in sorted(found):
        per_server = sorted(found[server])
        chosen.extend(per_server[:k])
    chosen.sort()
    return [SPath(nodes) for _delay, nodes in chosen]


def validate_graph(
    graph: NetworkGraph, timing: TimingConfig, demands: Sequence[Demand] = ()
) -> list[Violation]:
    """All structural violations, as data. Empty list means well-formed.

    Includes the single-cycle processability condition: every demand's task
    must fit inside one computation cycle on every server it could use.
    """
    out: list[Violation] = []
    seen_devices: set[str] = set()
    for dev, ap in graph.attachments:
        if dev not in graph.nodes or graph.nodes[dev] is not NodeKind.DEVICE:
            out.append(Violation("bad-attachment", dev, "attachment source is not a device"))
            continue
        if ap not in graph.nodes or graph.nodes[ap] is not NodeKind.AP:
            out.append(Violation("bad-attachment", dev, f"attached to non-AP {ap}"))
            continue
        if dev in seen_devices:
            out.append(Violation("multi-attach", dev, "device attached to several APs"))
        seen_devices.add(dev)
    for node, kind in graph.nodes.items():
        if kind is NodeKind.DEVICE and node not in seen_devices:
            out.append(Violation("no-attach", node, "device has no AP attachment"))
        if kind is NodeKind.SERVER and node not in graph.server_rate:
            out.append(Violation("no-server-rate", node, "server has no compute rate"))
    for (u, v), link in graph.links.items():
        if u not in graph.nodes or v not in graph.nodes:
            out.append(Violation("dangling-link", f"{u}->{v}", "endpoint not in graph"))
            continue
        if graph.nodes[u] is NodeKind.DEVICE or graph.nodes[v] is NodeKind.DEVICE:
            out.append(Violation("wired-to-device", f"{u}->{v}", "devices attach wirelessly"))
        if link.delay_ns <= 0:
            out.append(Violation("bad-delay", f"{u}->{v}", f"delay {link.delay_ns} ns"))
        if link.bandwidth_bps <= 0:
            out.append(Violation("bad-bandwidth", f"{u}->{v}", f"{link.bandwidth_bps} bps"))
    if graph.kappa <= 0:
        out.append(Violation("bad-kappa", "graph", f"kappa {graph.kappa}"))
    for d in demands:
        if d.payload_bits <= 0:
            out.append(Violation("demand-payload", d.id, f"{d.payload_bits} bits"))
        if d.period_ns <= 0 or timing.delta_hc % d.period_ns != 0:
            out.append(
                Violation("demand-period", d.id, f"period {d.period_ns} ns does not divide hypercycle")
            )
        if not 0 <= d.arrival_tti < timing.n_tti:
            out.append(Violation("demand-arrival", d.id, f"TTI {d.arrival_tti} out of range"))
        if d.source not in graph.nodes or graph.nodes[d.source] is not NodeKind.DEVICE:
            out.append(Violation("demand-source", d.id, f"{d.source} is not a device"))
        else:
            for server, rate in sorted(graph.server_rate.items()):
                # kappa*omega cycles must fit in one computation cycle: rate * delta_mec / 1e9
                if graph.kappa * d.payload_bits * NS_PER_S > rate * timing.delta_mec:
                    out.append(
                        Violation(
                            "single-cycle-violation",
                            server,
                            f"demand {d.id} needs {graph.kappa * d.payload_bits} cycles",
                        )
                    )
    return out
