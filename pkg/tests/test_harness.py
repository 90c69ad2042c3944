import math

import pytest

from wsnsched import gabas, greedy, harness
from wsnsched.harness import COLUMNS, ExperimentConfig, aggregate, read_csv, run_experiment, run_once, to_csv, write_csv

from conftest import desk_instance

FAST = dict(algorithms="lmpf,fcfs", runs=2, base_seed=5)


def small(**kw):
    args = {**FAST, "values": (20, 40), **kw}
    return ExperimentConfig.preset("desk", scenario=1, **args)


def test_presets():
    assert ExperimentConfig.preset("desk").runs == 20
    assert ExperimentConfig.preset("full").runs == 100
    assert ExperimentConfig.preset("desk", runs=3).runs == 3
    with pytest.raises(ValueError):
        ExperimentConfig.preset("huge")


def test_invalid_config():
    with pytest.raises(ValueError):
        ExperimentConfig(algorithms="gabas,edf")
    with pytest.raises(ValueError):
        ExperimentConfig(modes="both")
    with pytest.raises(ValueError):
        ExperimentConfig(runs=0)
    with pytest.raises(ValueError):
        ExperimentConfig(scenario=7)
    with pytest.raises(ValueError):
        ExperimentConfig(algorithms="")


def test_parse_normalises():
    assert harness.parse_algorithms("GABAS, lmpf") == ("gabas", "lmpf")
    assert harness.parse_modes(["Shared"]) == ("shared",)


def test_scenario_one_has_eleven_values():
    cfg = ExperimentConfig(scenario=1)
    assert len(cfg.sweep_values()) == 11
    topo, work = cfg.params_for(700)
    assert work.n_apps == 700 and topo == cfg.topology


def test_single_run_cardinality():
    cfg = ExperimentConfig.preset("desk", algorithms="fcfs", modes="shared", runs=1, base_seed=3)
    rows = run_experiment(cfg)
    assert [r.kind for r in rows] == ["run", "mean"]
    assert rows[0].run_seed == 3 and rows[1].makespan == rows[0].makespan


def test_row_order_and_counts():
    rows = run_experiment(small())
    # per value: 2 runs x 2 algorithms x 2 modes, then 4 means
    assert len(rows) == 2 * (8 + 4)
    first = rows[:12]
    assert all(r.value == 20 for r in first)
    assert [(r.run_seed, r.algorithm, r.mode) for r in first[:4]] == [
        (5, "lmpf", "shared"), (5, "lmpf", "unshared"), (5, "fcfs", "shared"), (5, "fcfs", "unshared")]
    assert [r.kind for r in first] == ["run"] * 8 + ["mean"] * 4


def test_aggregates_are_exact_means():
    rows = run_experiment(small())
    for value in (20, 40):
        runs = [r for r in rows if r.kind == "run" and r.value == value]
        means = [r for r in rows if r.kind == "mean" and r.value == value]
        for m in means:
            mine = [r for r in runs if (r.algorithm, r.mode) == (m.algorithm, m.mode)]
            for col in ("makespan", "avg_waiting", "avg_turnaround", "success_rate"):
                assert getattr(m, col) == math.fsum(getattr(r, col) for r in mine) / len(mine)
            assert m.wall_clock_ms is None


def test_run_rows_match_direct_scheduling():
    cfg = ExperimentConfig.preset("desk", algorithms="ltsf,gabas", modes="unshared", runs=1, base_seed=7,
                                  ga=gabas.GaParams(population_size=10, stagnation_limit=2))
    rows = run_experiment(cfg)
    topo, apps = desk_instance(7)
    assert rows[0].makespan == greedy.schedule(topo, apps, "ltsf", "unshared").makespan
    _, _, gs = harness.run_seeds(7)
    assert rows[1].makespan == gabas.schedule(topo, apps, "unshared", cfg.ga, seed=gs).makespan


def test_csv_is_reproducible(tmp_path):
    a = to_csv(run_experiment(small()))
    b = to_csv(run_experiment(small()))
    assert a == b
    assert a.splitlines()[0] == ",".join(COLUMNS)
    write_csv(run_experiment(small()), tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_bytes() == a.encode()
    back = read_csv(tmp_path / "r.csv")
    assert len(back) == 24 and back[0]["wall_clock_ms"] == ""


def test_parallel_matches_serial():
    assert to_csv(run_experiment(small(jobs=2))) == to_csv(run_experiment(small()))


def test_timing_column():
    rows = run_experiment(small(timing=True, runs=1, values=(20,)))
    assert all(r.wall_clock_ms is not None and r.wall_clock_ms >= 0 for r in rows)


def test_run_once_uses_split_seeds():
    cfg = ExperimentConfig.preset("desk")
    m1, secs = run_once(cfg.topology, cfg.workload, 9, "sjf", "shared")
    topo, apps = desk_instance(9)
    assert m1.makespan == greedy.schedule(topo, apps, "sjf", "shared").makespan
    assert secs >= 0
    assert len(set(harness.run_seeds(9))) == 3


def test_aggregate_groups_in_first_seen_order():
    rows = run_experiment(small(runs=1, values=(20,)))
    means = aggregate([r for r in rows if r.kind == "run"])
    assert [(m.algorithm, m.mode) for m in means] == [(r.algorithm, r.mode) for r in rows if r.kind == "mean"]
