"""Emission-cycle and accumulated-delay recursions on hand-traced paths."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detmec.latency import (
    LatencyReport,
    ShiftVector,
    accumulated_delay,
    check_deadline,
    emission_cycles,
    jitter_bound,
)
from detmec.netmodel import Demand, Link, NetworkGraph, NodeKind, SPath
from detmec.timefabric import ClockMap, compute_hypercycle

US = 1_000


def tiny_timing():
    return compute_hypercycle(100 * US, 20 * US, 50 * US, periods=(200 * US,), queue_count=4)


def chain():
    graph = NetworkGraph(
        nodes={
            "dev0": NodeKind.DEVICE, "ap0": NodeKind.AP,
            "r0": NodeKind.ROUTER, "s0": NodeKind.SERVER,
        },
        links={
            ("ap0", "r0"): Link("ap0", "r0", 10 * US, 10**9),
            ("r0", "s0"): Link("r0", "s0", 10 * US, 10**9),
        },
        attachments=(("dev0", "ap0"),),
        server_rate={"s0": 4_000_000_000},
        kappa=10,
    )
    path = SPath(("dev0", "ap0", "r0", "s0"))
    demand = Demand(
        id="d0", source="dev0", period_ns=200 * US, arrival_tti=0,
        payload_bits=8000, deadline_ns=900 * US,
    )
    return graph, path, demand


ZERO_CLOCKS = ClockMap(node_offsets={}, ap_internal={})


class TestShiftVector:
    def test_r0_and_full_vector(self):
        sv = ShiftVector(breve_r0=1, hat_r0=2, r_ap=1, r_server=2)
        assert sv.r0 == 3
        assert sv.full(4) == (3, 1, 1, 1, 2)
        assert sv.full(2) == (3, 1, 2)

    def test_check_rejects_bad_shifts(self):
        t = tiny_timing()
        assert t.shift_limit == 2
        ShiftVector(0, 1, 1, 1).check(t)
        ShiftVector(0, 1, 2, 2).check(t)
        with pytest.raises(ValueError):
            ShiftVector(-1, 1, 1, 1).check(t)
        with pytest.raises(ValueError):
            ShiftVector(0, 0, 1, 1).check(t)
        with pytest.raises(ValueError):
            ShiftVector(1, 1, 1, 1).check(t)  # window of 3 TTIs > ring of 2
        with pytest.raises(ValueError):
            ShiftVector(0, 1, 0, 1).check(t)
        with pytest.raises(ValueError):
            ShiftVector(0, 1, 1, 3).check(t)


class TestLatencyReport:
    def test_requires_one_delay_per_hop(self):
        with pytest.raises(ValueError):
            LatencyReport("d0", cycles=(1, 2), deltas=(5, 9), jitter_bound_ns=1)

    def test_requires_strictly_increasing_delays(self):
        with pytest.raises(ValueError):
            LatencyReport("d0", cycles=(1, 2, 3), deltas=(9, 9), jitter_bound_ns=1)

    def test_bound_is_last_delta(self):
        rep = LatencyReport("d0", cycles=(1, 2, 3), deltas=(5, 9), jitter_bound_ns=1)
        assert rep.bound_ns == 9


def test_jitter_bound_is_tti_plus_computation_cycle():
    assert jitter_bound(tiny_timing()) == 150 * US
    paper = compute_hypercycle(125 * US, 15 * US, 30 * US, periods=(750 * US,), queue_count=20)
    assert jitter_bound(paper) == 155 * US


class TestHandTracedChain:
    """Zero clock offsets, 10 us wire delays, arrival TTI 0.

    With r_0 = 1 the transmission ends at 200 us, exactly on a forwarding
    boundary, so the AP handoff waits one full forwarding cycle.
    """

    def setup_method(self):
        self.graph, self.path, self.demand = chain()
        self.timing = tiny_timing()

    def rep(self, sv):
        return accumulated_delay(self.demand, self.path, sv, self.timing, ZERO_CLOCKS, self.graph)

    def test_baseline_shifts(self):
        rep = self.rep(ShiftVector(0, 1, 1, 1))
        assert rep.cycles == (1, 1, 3, 2)
        assert rep.deltas == (240 * US, 280 * US, 350 * US)
        assert rep.bound_ns == 350 * US
        assert rep.jitter_bound_ns == 150 * US

    def test_first_hop_formula(self):
        # (1 + r_0) * delta_tti + handoff wait + r_ap * delta_dip
        rep = self.rep(ShiftVector(0, 1, 2, 1))
        assert rep.deltas[0] == 200 * US + 20 * US + 2 * 20 * US
        assert rep.cycles[1] == 2

    def test_server_shift_adds_whole_computation_cycles(self):
        base = self.rep(ShiftVector(0, 1, 1, 1))
        more = self.rep(ShiftVector(0, 1, 1, 2))
        assert more.bound_ns == base.bound_ns + 50 * US
        assert more.cycles[-1] == (base.cycles[-1] + 1) % self.timing.n_mec

    def test_emission_cycles_match_report(self):
        sv = ShiftVector(0, 1, 2, 2)
        cyc = emission_cycles(self.demand, self.path, sv, self.timing, ZERO_CLOCKS, self.graph)
        assert tuple(cyc) == self.rep(sv).cycles

    def test_check_deadline_non_strict(self):
        rep = self.rep(ShiftVector(0, 1, 1, 1))
        assert check_deadline(rep, self.demand)
        exact = Demand(
            id="d0", source="dev0", period_ns=200 * US, arrival_tti=0,
            payload_bits=8000, deadline_ns=rep.bound_ns,
        )
        assert check_deadline(rep, exact)
        tight = Demand(
            id="d0", source="dev0", period_ns=200 * US, arrival_tti=0,
            payload_bits=8000, deadline_ns=rep.bound_ns - 1,
        )
        assert not check_deadline(rep, tight)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    arrival=st.integers(0, 1),
    r_ap=st.integers(1, 2),
    r_server=st.integers(1, 2),
)
def test_delay_recursion_properties(seed, arrival, r_ap, r_server):
    """Random clock offsets never break the shape of the recursion."""
    graph, path, demand = chain()
    timing = tiny_timing()
    rng = random.Random(seed)
    clocks = ClockMap(
        node_offsets={n: rng.randrange(0, 40 * US) for n in graph.nodes},
        ap_internal={"ap0": rng.randrange(0, 20 * US)},
    )
    d = Demand(
        id="d0", source="dev0", period_ns=200 * US, arrival_tti=arrival,
        payload_bits=8000, deadline_ns=900 * US,
    )
    sv = ShiftVector(0, 1, r_ap, r_server)
    rep = accumulated_delay(d, path, sv, timing, clocks, graph)

    assert all(b > a for a, b in zip(rep.deltas, rep.deltas[1:]))
    assert rep.cycles[0] == (arrival + 1) % timing.n_tti
    # every hop's wait is bounded by link delay + one downstream cycle
    hop1 = rep.deltas[0] - 2 * timing.delta_tti - r_ap * timing.delta_dip
    assert 0 < hop1 <= timing.delta_dip
    hop2 = rep.deltas[1] - rep.deltas[0] - timing.delta_dip
    assert 10 * US < hop2 <= 10 * US + timing.delta_dip
    hop3 = rep.deltas[2] - rep.deltas[1] - r_server * timing.delta_mec
    assert 10 * US < hop3 <= 10 * US + timing.delta_mec


def test_buffering_moves_schedule_by_whole_ttis():
    graph, path, demand = chain()
    timing = compute_hypercycle(50 * US, 20 * US, 50 * US, periods=(200 * US,), queue_count=4)
    rng = random.Random(7)
    clocks = ClockMap(
        node_offsets={n: rng.randrange(0, 40 * US) for n in graph.nodes},
        ap_internal={"ap0": rng.randrange(0, 20 * US)},
    )
    for breve in (0, 1, 2):
        rep = accumulated_delay(demand, path, ShiftVector(breve, 1, 1, 1), timing, clocks, graph)
        base = accumulated_delay(demand, path, ShiftVector(0, 1, 1, 1), timing, clocks, graph)
        assert rep.bound_ns == base.bound_ns + breve * timing.delta_tti
