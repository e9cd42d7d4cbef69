"""Admission solvers on engineered instances with known optima.

All instances use the small clock skeleton (100/20/50 us cycles, Q=4), where
a 500 Mbps link carries exactly one 6000-bit payload per forwarding cycle.
That makes per-cycle collisions easy to stage and count by hand.
"""

import dataclasses

import pytest

from detmec.netmodel import Demand, Link, NetworkGraph, NodeKind, RBGrid
from detmec.scenario import generate_scenario
from detmec.scheduler import (
    InstanceTooLarge,
    OracleLimits,
    TabuConfig,
    brute_force_oracle,
    solve_baseline,
    solve_tabu,
    validate_plan,
)
from detmec.timefabric import ClockMap, compute_hypercycle

US = 1_000
TIMING = compute_hypercycle(100 * US, 20 * US, 50 * US, periods=(200 * US,), queue_count=4)
CLOCKS = ClockMap(node_offsets={}, ap_internal={})
GBPS = 10**9
MBPS500 = 500_000_000


def mk_graph(trunk_bps, leaf_bps):
    """ap0 fans out over trunk links; each router r_i feeds server s_i."""
    nodes = {"ap0": NodeKind.AP}
    links = {}
    for i, bps in enumerate(leaf_bps):
        r, s = f"r{i}", f"s{i}"
        nodes[r] = NodeKind.ROUTER
        nodes[s] = NodeKind.SERVER
        links[("ap0", r)] = Link("ap0", r, (10 + 10 * i) * US, trunk_bps[i])
        links[(r, s)] = Link(r, s, 10 * US, bps)
    return nodes, links


def build(n_demands, n_branches, trunk_bps, leaf_bps, *, arrivals=None, bits=6000,
          deadline=900 * US, deadlines=None, bands=8, rb_bits=3000, server_rate=10**10):
    nodes, links = mk_graph(trunk_bps, leaf_bps)
    attachments = []
    demands = []
    for i in range(n_demands):
        dev = f"dev{i}"
        nodes[dev] = NodeKind.DEVICE
        attachments.append((dev, "ap0"))
        demands.append(Demand(
            id=f"d{i}", source=dev, period_ns=200 * US,
            arrival_tti=(arrivals[i] if arrivals else 0),
            payload_bits=bits,
            deadline_ns=(deadlines[i] if deadlines else deadline),
        ))
    graph = NetworkGraph(
        nodes=nodes, links=links, attachments=tuple(attachments),
        server_rate={f"s{i}": server_rate for i in range(n_branches)},
        kappa=10,
    )
    grid = RBGrid.uniform(TIMING.n_tti, bands, rb_bits)
    return demands, graph, grid


def solve_all(demands, graph, grid, max_hops=3, limits=None):
    args = (demands, graph, grid, TIMING, CLOCKS, max_hops)
    return {
        "tabu": solve_tabu(*args),
        "spf": solve_baseline("spf", *args),
        "noshape": solve_baseline("noshape", *args),
        "oracle": brute_force_oracle(*args, limits=limits or OracleLimits(max_nodes=16)),
    }


def check(plan, demands, graph, grid, max_hops=3, timing=TIMING, clocks=CLOCKS):
    return validate_plan(plan, demands, graph, grid, timing, clocks, max_hops)


class TestSingleDemand:
    def test_every_solver_admits_it(self):
        demands, graph, grid = build(1, 1, [MBPS500], [MBPS500])
        for name, plan in solve_all(demands, graph, grid).items():
            assert plan.objective == 1, name
            assert plan.solver == name
            assert check(plan, demands, graph, grid) == []
            dp = plan.demands[0]
            assert dp.accepted and dp.path.server == "s0"


class TestShiftingUnlocksCapacity:
    def test_noshape_one_tabu_two(self):
        # one branch, same arrival: identical pinned shifts collide on the trunk
        demands, graph, grid = build(2, 1, [MBPS500], [GBPS])
        plans = solve_all(demands, graph, grid)
        assert plans["noshape"].objective == 1
        assert plans["tabu"].objective == 2
        assert plans["oracle"].objective == 2
        assert check(plans["tabu"], demands, graph, grid) == []

    def test_five_demands_two_branches_all_fit_only_with_shifts(self):
        # 2 branches x 2 AP shifts x 2 arrival classes = 8 trunk slots
        demands, graph, grid = build(
            5, 2, [MBPS500, MBPS500], [GBPS, GBPS], arrivals=[0, 0, 0, 1, 1]
        )
        plans = solve_all(demands, graph, grid)
        assert plans["oracle"].objective == 5
        assert plans["tabu"].objective == 5
        assert plans["noshape"].objective == 4
        for name in ("tabu", "oracle", "noshape"):
            assert check(plans[name], demands, graph, grid) == []

    def test_spf_funnels_into_congested_short_path(self):
        # branch 0 is nearer and has exactly two usable trunk cycles; only
        # d2's deadline rules out branch 1 (bound 400 us via the longer wire),
        # so spf spends both near slots on d0 and d1 and strands d2
        demands, graph, grid = build(
            3, 2, [MBPS500, MBPS500], [GBPS, GBPS],
            deadlines=[900 * US, 900 * US, 360 * US],
        )
        plans = solve_all(demands, graph, grid)
        assert plans["spf"].objective == 2
        assert plans["tabu"].objective == 3
        assert plans["oracle"].objective == 3
        d2 = plans["oracle"].by_id()["d2"]
        assert d2.accepted and d2.path.nodes[2] == "r0"


class TestRadioBottleneck:
    def test_single_shared_rb_admits_one(self):
        # both demands arrive in TTI 0, so both must transmit in TTI 1,
        # and the grid has exactly one block there
        demands, graph, grid = build(2, 1, [GBPS], [GBPS], bits=6000, bands=1, rb_bits=6000)
        plans = solve_all(demands, graph, grid)
        for name, plan in plans.items():
            assert plan.objective == 1, name
            accepted = [dp for dp in plan.demands if dp.accepted]
            assert accepted[0].rb_cells == ((1, 0),)


class TestInfeasibleDeadline:
    def test_all_rejected_with_explicit_rows(self):
        demands, graph, grid = build(3, 1, [GBPS], [GBPS], deadline=100 * US)
        for name, plan in solve_all(demands, graph, grid).items():
            assert plan.objective == 0, name
            assert len(plan.demands) == 3
            assert all(not dp.accepted and dp.path is None for dp in plan.demands)


class TestValidatePlan:
    def test_hop_bound_flagged_under_tighter_cap(self):
        demands, graph, grid = build(1, 1, [MBPS500], [MBPS500])
        plan = solve_tabu(demands, graph, grid, TIMING, CLOCKS, 3)
        out = check(plan, demands, graph, grid, max_hops=2)
        assert [v.code for v in out] == ["hop-bound"]

    def test_duplicated_rb_cells_flagged(self):
        demands, graph, grid = build(2, 1, [MBPS500], [GBPS])
        plan = solve_tabu(demands, graph, grid, TIMING, CLOCKS, 3)
        assert plan.objective == 2
        a, b = plan.demands
        forged = dataclasses.replace(b, rb_cells=a.rb_cells)
        bad = dataclasses.replace(plan, demands=(a, forged))
        codes = {v.code for v in check(bad, demands, graph, grid)}
        assert "rb-conflict" in codes

    def test_rejected_row_with_leftover_assignment(self):
        demands, graph, grid = build(1, 1, [MBPS500], [MBPS500])
        plan = solve_tabu(demands, graph, grid, TIMING, CLOCKS, 3)
        dp = plan.demands[0]
        bad = dataclasses.replace(plan, demands=(dataclasses.replace(dp, accepted=False),))
        codes = [v.code for v in check(bad, demands, graph, grid)]
        assert codes == ["rejected-with-reservation"]


class TestOracleRefusals:
    def test_too_many_demands(self):
        demands, graph, grid = build(7, 1, [GBPS], [GBPS], bands=16)
        with pytest.raises(InstanceTooLarge):
            brute_force_oracle(demands, graph, grid, TIMING, CLOCKS, 3,
                               limits=OracleLimits(max_nodes=16))

    def test_too_many_nodes(self):
        demands, graph, grid = build(5, 2, [MBPS500, MBPS500], [GBPS, GBPS])
        with pytest.raises(InstanceTooLarge):
            brute_force_oracle(demands, graph, grid, TIMING, CLOCKS, 3)

    def test_too_many_queues(self):
        big_q = compute_hypercycle(125 * US, 15 * US, 30 * US,
                                   periods=(750 * US,), queue_count=20)
        demands, graph, grid = build(1, 1, [GBPS], [GBPS])
        with pytest.raises(InstanceTooLarge):
            brute_force_oracle(demands, graph, grid, big_q, CLOCKS, 3)


class TestDeterminismAndDominance:
    def test_same_inputs_same_plan(self):
        sc = generate_scenario("tiny", 9)
        a = solve_tabu(sc.demands, sc.graph, sc.grid, sc.timing, sc.clocks, sc.max_hops)
        b = solve_tabu(sc.demands, sc.graph, sc.grid, sc.timing, sc.clocks, sc.max_hops)
        assert a == b

    @pytest.mark.parametrize("seed", range(4))
    def test_tabu_never_below_baselines_and_matches_oracle(self, seed):
        sc = generate_scenario("tiny", seed)
        args = (sc.demands, sc.graph, sc.grid, sc.timing, sc.clocks, sc.max_hops)
        tabu = solve_tabu(*args)
        spf = solve_baseline("spf", *args)
        noshape = solve_baseline("noshape", *args)
        oracle = brute_force_oracle(*args)
        assert tabu.objective >= max(spf.objective, noshape.objective)
        assert tabu.objective == oracle.objective
        for plan in (tabu, spf, noshape, oracle):
            out = check(plan, sc.demands, sc.graph, sc.grid, sc.max_hops,
                        timing=sc.timing, clocks=sc.clocks)
            assert out == []
            assert plan.objective == sum(dp.accepted for dp in plan.demands)

    def test_warm_start_cannot_hurt(self):
        sc = generate_scenario("tiny", 2)
        args = (sc.demands, sc.graph, sc.grid, sc.timing, sc.clocks, sc.max_hops)
        cold = solve_tabu(*args)
        warm = solve_tabu(*args, warm_start=cold)
        assert warm.objective >= cold.objective


def test_tabu_config_validation():
    with pytest.raises(ValueError):
        TabuConfig(tenure=0)
    with pytest.raises(ValueError):
        TabuConfig(stall_limit=0)
    TabuConfig(stall_limit=None)
