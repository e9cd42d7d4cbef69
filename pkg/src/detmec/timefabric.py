"""Clock domains, the hypercycle, and the cross-domain cycle mapping.

Every duration in this package is an exact integer number of nanoseconds.
The cycle mapping and its delay are boundary-sensitive floor/mod expressions,
so all arithmetic here is integer arithmetic; nothing in this module touches
floats.

Three clock domains exist:

* ``RAN``  -- radio side, TTI cycles of length ``delta_tti``
* ``WN``   -- wired side, forwarding cycles of length ``delta_dip``
* ``MECS`` -- compute side, computation cycles of length ``delta_mec``

All nodes agree on the hypercycle length ``delta_hc`` (frequency sync); the
start instants of their hypercycles may differ by a constant signed offset
``tau_hc = t_downstream - t_upstream``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

US = 1_000  # ns per microsecond
MS = 1_000_000  # ns per millisecond


class InvalidConfigError(ValueError):
    """Raised for timing parameters that cannot form a valid configuration."""


class DomainError(ValueError):
    """Raised when a cycle index is outside its domain's range."""


class Domain(Enum):
    RAN = "ran"
    WN = "wn"
    MECS = "mecs"


@dataclass(frozen=True)
class DomainTag:
    """One clock lane: which domain it is, cycle length, cycles per hypercycle."""

    domain: Domain
    cycle_ns: int
    cycles_per_hc: int


@dataclass(frozen=True)
class TimingConfig:
    """The shared clock skeleton: cycle lengths, hypercycle, queue count.

    Invariants (checked on construction):
      * delta_tti * n_tti == delta_dip * n_dip == delta_mec * n_mec == delta_hc
      * n_dip >= Q and n_mec >= Q, Q >= 3
    """

    delta_tti: int
    delta_dip: int
    delta_mec: int
    queue_count: int
    n_hc: int
    delta_hc: int
    n_tti: int
    n_dip: int
    n_mec: int

    def __post_init__(self) -> None:
        for name in ("delta_tti", "delta_dip", "delta_mec", "delta_hc"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be positive")
        if self.queue_count < 3:
            raise InvalidConfigError("queue_count must be at least 3")
        if self.n_hc < 1:
            raise InvalidConfigError("n_hc must be at least 1")
        if (
            self.delta_tti * self.n_tti != self.delta_hc
            or self.delta_dip * self.n_dip != self.delta_hc
            or self.delta_mec * self.n_mec != self.delta_hc
        ):
            raise InvalidConfigError("cycle counts do not tile the hypercycle")
        if self.n_dip < self.queue_count or self.n_mec < self.queue_count:
            raise InvalidConfigError(
                "hypercycle too short: need n_dip and n_mec >= queue_count"
            )

    def tag(self, domain: Domain) -> DomainTag:
        if domain is Domain.RAN:
            return DomainTag(domain, self.delta_tti, self.n_tti)
        if domain is Domain.WN:
            return DomainTag(domain, self.delta_dip, self.n_dip)
        return DomainTag(domain, self.delta_mec, self.n_mec)

    @property
    def shift_limit(self) -> int:
        """Largest permitted cycle shift at a shaping node (queue ring size - 2)."""
        return self.queue_count - 2


def compute_hypercycle(
    delta_tti: int,
    delta_dip: int,
    delta_mec: int,
    periods: Iterable[int] = (),
    queue_count: int = 3,
) -> TimingConfig:
    """Derive the full timing configuration from cycle lengths and demand periods.

    The hypercycle is ``n_hc * lcm(cycle lengths and periods)`` with the
    smallest ``n_hc >= 1`` that leaves at least ``queue_count`` forwarding and
    computation cycles per hypercycle.

    All inputs are integer nanoseconds; zero or negative durations are
    rejected.
    """
    periods = tuple(periods)
    for value in (delta_tti, delta_dip, delta_mec, *periods):
        if not isinstance(value, int) or value <= 0:
            raise InvalidConfigError(f"durations must be positive integers, got {value!r}")
    if queue_count < 3:
        raise InvalidConfigError("queue_count must be at least 3")

    base = math.lcm(delta_tti, delta_dip, delta_mec, *periods)
    n_hc = max(
        1,
        -(-queue_count // (base // delta_dip)),
        -(-queue_count // (base // delta_mec)),
    )
    delta_hc = n_hc * base
    return TimingConfig(
        delta_tti=delta_tti,
        delta_dip=delta_dip,
        delta_mec=delta_mec,
        queue_count=queue_count,
        n_hc=n_hc,
        delta_hc=delta_hc,
        n_tti=delta_hc // delta_tti,
        n_dip=delta_hc // delta_dip,
        n_mec=delta_hc // delta_mec,
    )


@dataclass(frozen=True)
class ClockOffset:
    """Hypercycle-start offset between two adjacent nodes.

    ``tau_hc = t_downstream - t_upstream`` (signed ns), constant for the whole
    run. A device and its access point are strictly synchronized, so their
    offset is always zero.
    """

    upstream: str
    downstream: str
    tau_hc: int


def _mapped_end_index(
    a: int, upstream: DomainTag, downstream: DomainTag, link_delay: int, tau_hc: int
) -> int:
    """Unwrapped index of the downstream cycle whose end bounds the arrival.

    A packet leaving upstream cycle ``a`` departs no later than ``(a+1)`` cycle
    lengths after the upstream hypercycle start; adding the link delay and
    re-expressing on the downstream clock gives the latest arrival instant.
    Floor division yields the cycle in progress at that instant.  Python's
    floor division keeps this exact for negative offsets as well.
    """
    t = (a + 1) * upstream.cycle_ns + link_delay - tau_hc
    return t // downstream.cycle_ns


def map_cycle(
    a: int,
    upstream: DomainTag,
    downstream: DomainTag,
    link_delay: int,
    offset: ClockOffset | int,
) -> int:
    """Last possible receiving cycle on the downstream clock.

    A packet sent during upstream cycle ``a`` is fully received no later than
    the end of the returned downstream cycle.  An arrival exactly on a cycle
    boundary counts toward the cycle whose end bounds it (plain floor
    semantics on the latest departure instant ``(a+1) * cycle``).

    The wireless device-to-AP hop is the one exception: both ends run the
    same strictly synchronized TTI clock and the air delay is zero, so the
    mapping is the identity there.
    """
    if not 0 <= a < upstream.cycles_per_hc:
        raise DomainError(f"cycle index {a} outside [0, {upstream.cycles_per_hc})")
    if upstream.domain is Domain.RAN and downstream.domain is Domain.RAN:
        return a
    tau_hc = offset.tau_hc if isinstance(offset, ClockOffset) else offset
    f = _mapped_end_index(a, upstream, downstream, link_delay, tau_hc)
    return f % downstream.cycles_per_hc


def mapping_delay(
    a: int,
    upstream: DomainTag,
    downstream: DomainTag,
    link_delay: int,
    offset: ClockOffset | int,
) -> int:
    """Worst-case wait from the end of sending cycle ``a`` to the end of the
    mapped receiving cycle, measured on the upstream clock.

    The worst-case per-hop transmission delay is this value plus one upstream
    cycle length (the packet may have been handed over at the very start of
    cycle ``a``).  Zero on the synchronized device-to-AP hop.
    """
    if not 0 <= a < upstream.cycles_per_hc:
        raise DomainError(f"cycle index {a} outside [0, {upstream.cycles_per_hc})")
    if upstream.domain is Domain.RAN and downstream.domain is Domain.RAN:
        return 0
    tau_hc = offset.tau_hc if isinstance(offset, ClockOffset) else offset
    f = _mapped_end_index(a, upstream, downstream, link_delay, tau_hc)
    return (f + 1) * downstream.cycle_ns + tau_hc - (a + 1) * upstream.cycle_ns


def unwrap_periodic(a: int, k: int, tag: DomainTag) -> int:
    """Fold an index advanced by ``k`` whole hypercycles back into its domain.

    The mapping repeats every hypercycle, so ``map_cycle(unwrap_periodic(a, k,
    tag), ...)`` equals ``map_cycle(a, ...)`` for any repetition count ``k``.
    """
    return (a + k * tag.cycles_per_hc) % tag.cycles_per_hc


@dataclass(frozen=True)
class ClockMap:
    """Absolute hypercycle-start offsets for every clock in the network.

    Offsets are stored per node so that pairwise offsets are automatically
    consistent along any path (``tau_hc(u, v) = start(v) - start(u)``).
    Access points carry two clocks: their TTI clock uses the node offset and
    their forwarding clock adds ``ap_internal`` (default 0).  Devices share
    their AP's TTI clock and therefore need no entry.
    """

    node_offsets: Mapping[str, int]
    ap_internal: Mapping[str, int] = field(default_factory=dict)

    def frame_offset(self, node: str, domain: Domain) -> int:
        base = self.node_offsets.get(node, 0)
        if domain is Domain.WN and node in self.ap_internal:
            return base + self.ap_internal[node]
        return base

    def tau_hc(self, upstream: str, up_domain: Domain, downstream: str, down_domain: Domain) -> int:
        return self.frame_offset(downstream, down_domain) - self.frame_offset(
            upstream, up_domain
        )

    def tau_ap_internal(self, ap: str) -> int:
        """Offset of an AP's forwarding clock relative to its TTI clock."""
        return self.ap_internal.get(ap, 0)

    def pair(self, upstream: str, up_domain: Domain, downstream: str, down_domain: Domain) -> ClockOffset:
        return ClockOffset(
            upstream, downstream, self.tau_hc(upstream, up_domain, downstream, down_domain)
        )
