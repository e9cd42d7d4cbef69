"""Cycle-scheduled edge offloading toolkit.

A planner that admits periodic offloading demands onto a radio + wired +
compute network with per-cycle resource reservations, and a cycle-accurate
simulator that executes the resulting plan (or a best-effort baseline) to
measure latency and jitter.
"""

__version__ = "0.1.0"

from .timefabric import (
    Domain,
    DomainTag,
    TimingConfig,
    ClockOffset,
    ClockMap,
    compute_hypercycle,
    map_cycle,
    mapping_delay,
    unwrap_periodic,
)
from .netmodel import (
    NodeKind,
    Link,
    NetworkGraph,
    RBGrid,
    Demand,
    SPath,
    Violation,
    enumerate_spaths,
    rb_window_capacity,
    validate_graph,
)
from .latency import (
    ShiftVector,
    LatencyReport,
    emission_cycles,
    accumulated_delay,
    check_deadline,
    jitter_bound,
)
from .ledger import CycleLedger, ReservationHandle, LedgerError
from .scheduler import (
    DemandPlan,
    SchedulePlan,
    TabuConfig,
    OracleLimits,
    InstanceTooLarge,
    solve_tabu,
    solve_baseline,
    brute_force_oracle,
    validate_plan,
)
from .simulate import (
    BackgroundTraffic,
    HopRecord,
    PacketTrace,
    PortQueues,
    run_deterministic,
    run_best_effort,
    trace_stats,
)
from .scenario import Scenario, generate_scenario, load_scenario, save_scenario

__all__ = [
    "Domain",
    "DomainTag",
    "TimingConfig",
    "ClockOffset",
    "ClockMap",
    "compute_hypercycle",
    "map_cycle",
    "mapping_delay",
    "unwrap_periodic",
    "NodeKind",
    "Link",
    "NetworkGraph",
    "RBGrid",
    "Demand",
    "SPath",
    "Violation",
    "enumerate_spaths",
    "rb_window_capacity",
    "validate_graph",
    "ShiftVector",
    "LatencyReport",
    "emission_cycles",
    "accumulated_delay",
    "check_deadline",
    "jitter_bound",
    "CycleLedger",
    "ReservationHandle",
    "LedgerError",
    "DemandPlan",
    "SchedulePlan",
    "TabuConfig",
    "OracleLimits",
    "InstanceTooLarge",
    "solve_tabu",
    "solve_baseline",
    "brute_force_oracle",
    "validate_plan",
    "BackgroundTraffic",
    "HopRecord",
    "PacketTrace",
    "PortQueues",
    "run_deterministic",
    "run_best_effort",
    "trace_stats",
    "Scenario",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
]
