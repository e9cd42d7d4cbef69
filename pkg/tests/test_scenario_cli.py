"""Scenario generation/serialization, result exports, CLI exit codes."""

import json

import pytest

from detmec.cli import main
from detmec.netmodel import NodeKind
from detmec.results import (
    TRACE_COLUMNS,
    config_hash,
    load_plan,
    read_traces_csv,
    save_plan,
    trace_rows,
    write_csv,
    write_traces_csv,
)
from detmec.scenario import (
    ScenarioError,
    generate_scenario,
    load_scenario,
    save_scenario,
    scenario_json,
    scenario_to_obj,
)
from detmec.scheduler import OracleLimits, solve_tabu
from detmec.simulate import HopRecord, PacketTrace

US = 1_000


class TestGenerator:
    def test_tiny_shape(self):
        sc = generate_scenario("tiny", 0)
        kinds = [sc.graph.kind(n) for n in sc.graph.nodes]
        assert kinds.count(NodeKind.DEVICE) == 2
        assert kinds.count(NodeKind.AP) == 1
        assert kinds.count(NodeKind.ROUTER) == 2
        assert kinds.count(NodeKind.SERVER) == 2
        assert 3 <= len(sc.demands) <= 6
        assert sc.timing.queue_count == 4

    def test_tiny_fits_under_default_oracle_limits(self):
        lim = OracleLimits()
        for seed in range(10):
            sc = generate_scenario("tiny", seed)
            assert len(sc.demands) <= lim.max_demands
            assert len(sc.graph.nodes) <= lim.max_nodes
            assert sc.timing.queue_count <= lim.max_queue_count

    def test_paper_like_inventory(self):
        sc = generate_scenario("paper-like", 0)
        kinds = [sc.graph.kind(n) for n in sc.graph.nodes]
        assert kinds.count(NodeKind.AP) == 10
        assert kinds.count(NodeKind.ROUTER) == 15
        assert kinds.count(NodeKind.SERVER) == 5
        assert kinds.count(NodeKind.DEVICE) == 40
        assert len(sc.demands) == 40
        assert sc.timing.n_tti == 6 and sc.timing.n_dip == 50 and sc.timing.n_mec == 25
        rates = sorted(sc.graph.server_rate.values())
        assert rates == [5_400_000_000] * 3 + [11_000_000_000] * 2

    def test_stress_is_heavier(self):
        sc = generate_scenario("stress", 0)
        assert sc.profile == "stress"
        assert len(sc.demands) == 80

    def test_same_seed_same_scenario(self):
        assert generate_scenario("tiny", 5) == generate_scenario("tiny", 5)
        assert scenario_json(generate_scenario("paper-like", 2)) == scenario_json(
            generate_scenario("paper-like", 2)
        )

    def test_different_seed_differs(self):
        assert generate_scenario("tiny", 1) != generate_scenario("tiny", 2)

    def test_unknown_profile(self):
        with pytest.raises(ScenarioError):
            generate_scenario("huge", 0)


class TestScenarioSerialization:
    def test_round_trip_equality(self, tmp_path):
        for profile in ("tiny", "paper-like"):
            sc = generate_scenario(profile, 4)
            path = tmp_path / f"{profile}.json"
            save_scenario(sc, path)
            assert load_scenario(path) == sc

    def test_unknown_top_level_key_rejected(self, tmp_path):
        obj = scenario_to_obj(generate_scenario("tiny", 0))
        obj["surprise"] = 1
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(ScenarioError, match="surprise"):
            load_scenario(path)

    def test_bad_demand_rejected_on_load(self, tmp_path):
        for field, val in (("payload_bits", -5), ("arrival_tti", 99)):
            obj = scenario_to_obj(generate_scenario("tiny", 0))
            obj["demands"][0][field] = val
            path = tmp_path / "sc.json"
            path.write_text(json.dumps(obj))
            with pytest.raises(ScenarioError, match="demand-"):
                load_scenario(path)

    def test_explicit_hypercycle_override(self, tmp_path):
        sc = generate_scenario("tiny", 0)
        obj = scenario_to_obj(sc)
        obj["timing"]["n_hc"] = 2
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(obj))
        doubled = load_scenario(path)
        assert doubled.timing.delta_hc == 2 * sc.timing.delta_hc
        assert doubled.timing.n_dip == 2 * sc.timing.n_dip

    def test_clock_randomize_directive(self, tmp_path):
        obj = scenario_to_obj(generate_scenario("tiny", 0))
        obj["clocks"] = {
            "randomize": {"seed": 12, "node_range_ns": 40 * US, "ap_range_ns": 20 * US}
        }
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(obj))
        a = load_scenario(path)
        b = load_scenario(path)
        assert a.clocks == b.clocks
        assert all(0 <= v < 40 * US for v in a.clocks.node_offsets.values())

    def test_config_hash_tracks_content(self):
        a = generate_scenario("tiny", 0)
        b = generate_scenario("tiny", 1)
        assert config_hash(a) == config_hash(a)
        assert config_hash(a) != config_hash(b)
        assert config_hash(a, {"mode": "det"}) != config_hash(a, {"mode": "be"})


class TestPlanSerialization:
    def test_round_trip(self, tmp_path):
        sc = generate_scenario("tiny", 1)
        plan = solve_tabu(sc.demands, sc.graph, sc.grid, sc.timing, sc.clocks, sc.max_hops)
        path = tmp_path / "plan.json"
        save_plan(plan, path)
        assert load_plan(path) == plan


GOLDEN_TRACES = [
    PacketTrace("d0", 0, (
        HopRecord("dev0", 12, 1, 0),
        HopRecord("ap0", 200000, 1, 1),
        HopRecord("s0", 230000, 2, 2),
    ), 290000, 289988),
    PacketTrace("d0", 1, (
        HopRecord("dev0", 200012, 1, 0),
        HopRecord("ap0", 400000, 1, 1),
        HopRecord("s0", 430000, 2, 2),
    ), 490000, 289988),
    PacketTrace("d1", 0, (
        HopRecord("dev1", 55, 0, 0),
        HopRecord("ap0", 150000, 3, 3),
        HopRecord("s1", 180000, 1, 0),
    ), 240000, 239945),
]

GOLDEN_CSV = """demand_id,hypercycle,hop,node,arrival_ns,departure_cycle,queue_slot,completion_ns,latency_ns
d0,0,0,dev0,12,1,0,290000,289988
d0,0,1,ap0,200000,1,1,290000,289988
d0,0,2,s0,230000,2,2,290000,289988
d0,1,0,dev0,200012,1,0,490000,289988
d0,1,1,ap0,400000,1,1,490000,289988
d0,1,2,s0,430000,2,2,490000,289988
d1,0,0,dev1,55,0,0,240000,239945
d1,0,1,ap0,150000,3,3,240000,239945
d1,0,2,s1,180000,1,0,240000,239945
"""


class TestTraceCsv:
    def test_golden_rendering(self, tmp_path):
        path = tmp_path / "traces.csv"
        write_traces_csv(GOLDEN_TRACES, path)
        assert path.read_text() == GOLDEN_CSV

    def test_round_trip(self, tmp_path):
        path = tmp_path / "traces.csv"
        write_traces_csv(GOLDEN_TRACES, path)
        assert read_traces_csv(path) == GOLDEN_TRACES

    def test_empty_is_header_only(self, tmp_path):
        path = tmp_path / "traces.csv"
        write_traces_csv([], path)
        assert path.read_text() == ",".join(TRACE_COLUMNS) + "\n"
        assert read_traces_csv(path) == []

    def test_rows_are_denormalized_per_hop(self):
        rows = trace_rows(GOLDEN_TRACES)
        assert len(rows) == 9
        assert rows[0][:4] == ("d0", 0, 0, "dev0")

    def test_write_csv_uses_unix_newlines(self, tmp_path):
        path = tmp_path / "x.csv"
        write_csv(path, ("a", "b"), [(1, 2), (3, 4)])
        assert path.read_bytes() == b"a,b\n1,2\n3,4\n"


class TestCli:
    def test_generate_schedule_simulate_pipeline(self, tmp_path, capsys):
        sc_path = tmp_path / "sc.json"
        plan_path = tmp_path / "plan.json"
        csv_path = tmp_path / "traces.csv"
        assert main(["generate", "--profile", "tiny", "--seed", "3", "-o", str(sc_path)]) == 0
        assert main(["schedule", str(sc_path), "--solver", "tabu", "-o", str(plan_path)]) == 0
        assert main(["simulate", str(sc_path), str(plan_path), "--hypercycles", "5",
                     "-o", str(csv_path)]) == 0
        out = capsys.readouterr().out
        assert "admitted" in out and "max_jitter_ns" in out
        assert csv_path.exists()
        assert csv_path.with_suffix(".png").exists()
        summary = json.loads(csv_path.with_suffix(".summary.json").read_text())
        assert summary["mode"] == "det"
        assert summary["stats"]["overall"]["deadline_miss"] == 0

    def test_schedule_oracle_matches_tabu_on_tiny(self, tmp_path, capsys):
        sc_path = tmp_path / "sc.json"
        main(["generate", "--profile", "tiny", "--seed", "3", "-o", str(sc_path)])
        assert main(["schedule", str(sc_path), "--solver", "oracle",
                     "-o", str(tmp_path / "po.json")]) == 0
        assert main(["schedule", str(sc_path), "--solver", "tabu",
                     "-o", str(tmp_path / "pt.json")]) == 0
        po = load_plan(tmp_path / "po.json")
        pt = load_plan(tmp_path / "pt.json")
        assert po.objective == pt.objective

    def test_oracle_refusal_exit_code(self, tmp_path):
        sc_path = tmp_path / "sc.json"
        main(["generate", "--profile", "paper-like", "-o", str(sc_path)])
        assert main(["schedule", str(sc_path), "--solver", "oracle",
                     "-o", str(tmp_path / "p.json")]) == 3

    def test_bad_scenario_file_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"format": "detmec-scenario-1", "nonsense": True}))
        assert main(["schedule", str(bad), "-o", str(tmp_path / "p.json")]) == 2

    def test_compare_and_sweep_reports(self, tmp_path, capsys):
        sc_path = tmp_path / "sc.json"
        plan_path = tmp_path / "plan.json"
        main(["generate", "--profile", "tiny", "--seed", "3", "-o", str(sc_path)])
        main(["schedule", str(sc_path), "-o", str(plan_path)])

        cmp_dir = tmp_path / "cmp"
        assert main(["compare", str(sc_path), str(plan_path), "--hypercycles", "10",
                     "--utilizations", "0.2,0.6", "--outdir", str(cmp_dir)]) == 0
        for name in ("compare.csv", "compare.png", "traces_det.csv",
                     "traces_be_u20.csv", "traces_be_u60.csv",
                     "latency_det.png", "summary.json"):
            assert (cmp_dir / name).exists(), name

        sweep_dir = tmp_path / "sweep"
        assert main(["sweep", str(sc_path), "--param", "H", "--range", "3..4",
                     "--outdir", str(sweep_dir)]) == 0
        assert (sweep_dir / "sweep.csv").exists()
        assert (sweep_dir / "sweep.png").exists()
        header, *rows = (sweep_dir / "sweep.csv").read_text().splitlines()
        assert header == "H,solver,objective,total_bound_ns"
        assert len(rows) == 2 * 3  # two H values x three solvers
