import math

import numpy as np
import pytest

from wsnsched import greedy
from wsnsched.gabas import GeneSpace
from wsnsched.simulator import (
    Schedule,
    audit,
    audit_report,
    metrics_from,
    read_trace,
    run,
    run_reference,
    write_trace,
)
from wsnsched.topology import TopologyParams, generate_topology
from wsnsched.workload import WorkloadParams, generate_workload

from conftest import app, make_topology


def test_unit_sensor_sequential_vs_shared(one_sensor):
    apps = [app(0, [(0, 1)], 10), app(1, [(0, 1)], 5)]
    uns = run(one_sensor, apps, Schedule((0, 1)), "unshared")
    assert [r.t0 for r in uns.records] == [0.0, 10.0]
    assert uns.makespan == 15
    assert run(one_sensor, apps, Schedule((0, 1)), "shared").makespan == 10


def test_empty_workload(one_sensor):
    m = run(one_sensor, [], Schedule(()), "shared")
    assert m.makespan == 0 and m.success_rate == 1.0 and m.records == []


def test_head_of_line_blocking():
    topo = make_topology([(0, 0), (200, 200)], [(0, 10, 50, 100, 10.0), (200, 210, 50, 100, 10.0)],
                         [(0, 20), (200, 220)])
    apps = [app(0, [(0, 10)], 10), app(1, [(0, 5)], 3), app(2, [(1, 5)], 4)]
    m = run(topo, apps, Schedule((0, 1, 2)), "unshared", trace=True)
    t0 = {r.app_id: r.t0 for r in m.records}
    # app 2 would fit at once on the other sensor, but waits behind the blocked app 1
    assert t0 == {0: 0.0, 1: 10.0, 2: 10.0}
    assert any(e["event"] == "block" and e["app"] == 1 for e in m.trace)


def test_release_before_admission_same_instant(one_sensor):
    apps = [app(0, [(0, 1)], 4), app(1, [(0, 1)], 4)]
    m = run(one_sensor, apps, Schedule((0, 1)), "unshared", trace=True)
    kinds = [(e["time"], e["event"], e["app"]) for e in m.trace if e["event"] in ("admit", "release")]
    assert kinds == [(0.0, "admit", 0), (4.0, "release", 0), (4.0, "admit", 1), (8.0, "release", 1)]


def test_arrivals_respected():
    topo = make_topology([(0, 0)], [(0, 10, 50, 100, 100.0)], [(0, 20)])
    apps = [app(0, [(0, 1)], 5, arrival=0), app(1, [(0, 1)], 5, arrival=7)]
    m = run(topo, apps, Schedule((1, 0)), "shared")
    t0 = {r.app_id: r.t0 for r in m.records}
    # the later-ranked app that has arrived runs; app 1 starts on arrival
    assert t0 == {0: 0.0, 1: 7.0}
    assert m.records[1].waited == 0.0


def test_rejected_apps_excluded_and_missed(one_sensor):
    apps = [app(0, [(0, 1)], 10, deadline=100), app(1, [(0, 2)], 5, deadline=100)]
    m = run(one_sensor, apps, Schedule((1, 0)), "shared")
    assert m.rejected == [1]
    assert [r.app_id for r in m.records] == [0]
    assert m.makespan == 10 and m.avg_waiting == 0
    assert m.success_rate == 0.5


def test_all_rejected_gives_nan_averages(one_sensor):
    m = run(one_sensor, [app(0, [(0, 5)], 10)], Schedule((0,)), "shared")
    assert m.makespan == 0 and math.isnan(m.avg_waiting) and m.success_rate == 0.0


def test_metrics_identities(desk):
    topo, apps = desk
    m = greedy.schedule(topo, apps, "ltsf", "shared")
    by_id = {a.id: a for a in apps}
    assert m.makespan == max(r.tf for r in m.records)
    for r in m.records:
        a = by_id[r.app_id]
        assert r.tf == r.t0 + a.duration
        assert r.waited == r.t0 - a.arrival_time >= 0
        assert r.turnaround == r.tf - a.arrival_time
        assert r.met_deadline == (r.tf <= a.deadline)
    assert m.avg_waiting == pytest.approx(np.mean([r.waited for r in m.records]), abs=1e-9)
    assert m.avg_turnaround == pytest.approx(np.mean([r.turnaround for r in m.records]), abs=1e-9)
    assert m.success_rate == sum(r.met_deadline for r in m.records) / len(apps)


def test_genes_used_and_sticky(two_sensors):
    apps = [app(0, [(0, 10)], 10), app(1, [(0, 10)], 10, arrival=5)]
    genes = Schedule((0, 1), (1,), (1,))
    m = run(two_sensors, apps, genes, "shared", trace=True)
    admits = [e["assignment"] for e in m.trace if e["event"] == "admit"]
    assert admits == [{"0": [1, 1]}, {"0": [1, 1]}]


def test_genes_fall_back_to_worst_fit_on_idle_network():
    # point 0 served by s0 (cap 10) or s1 (cap 100); genes pick s0 which can never host rate 20
    topo = make_topology([(0, 0)], [(0, 10, 50, 100, 10.0), (10, 0, 50, 100, 100.0)], [(0, 20)])
    m = run(topo, [app(0, [(0, 20)], 5)], Schedule((0,), (0,), (0,)), "shared", trace=True)
    assert m.rejected == []
    assert m.trace[1]["assignment"] == {"0": [1, 0]}


def test_schedule_validation(two_sensors):
    apps = [app(0, [(0, 1)], 1), app(1, [(0, 1)], 1)]
    with pytest.raises(ValueError):
        run(two_sensors, apps, Schedule((0, 0)), "shared")
    with pytest.raises(ValueError):
        run(two_sensors, apps, Schedule((0, 1), (7,), (0,)), "shared")
    with pytest.raises(ValueError):
        run(two_sensors, apps, Schedule((0, 1), (0, 0), (0, 0)), "shared")


def _random_case(seed):
    rng = np.random.default_rng(seed)
    topo = generate_topology(
        TopologyParams(width=300, height=300, n_points=int(rng.integers(3, 15)), n_sensors=int(rng.integers(2, 10)),
                       n_bases=int(rng.integers(1, 4)), comm_range=(100, 250), sensing_range=(40, 90),
                       sensing_capacity=float(rng.choice([40, 60, 100]))),
        int(rng.integers(2**31)),
    )
    work = WorkloadParams(n_apps=int(rng.integers(1, 40)), n_batches=int(rng.integers(1, 5)),
                          points_per_app=(1, min(3, topo.n_points)), duration=(1, 30),
                          batch_interval=float(rng.choice([0, 5, 17])))
    apps = generate_workload(topo, work, int(rng.integers(2**31)))
    order = rng.permutation([a.id for a in apps]).tolist()
    space = GeneSpace(topo)
    s, b = space.draw(rng, np.arange(topo.n_points))
    return topo, apps, order, (tuple(s.tolist()), tuple(b.tolist()))


@pytest.mark.parametrize("seed", range(40))
def test_engine_matches_reference(seed):
    topo, apps, order, (gs, gb) = _random_case(seed)
    for mode in ("shared", "unshared"):
        for sched in (Schedule(tuple(order)), Schedule(tuple(order), gs, gb)):
            fast = run(topo, apps, sched, mode, trace=True)
            ref = run_reference(topo, apps, sched, mode, trace=True)
            assert fast.records == ref.records
            assert fast.rejected == ref.rejected
            assert fast.trace == ref.trace
            assert audit(topo, apps, fast.trace, mode)


@pytest.mark.parametrize("seed", range(10))
def test_run_invariants(seed):
    topo, apps, order, genes = _random_case(100 + seed)
    m = run(topo, apps, Schedule(tuple(order), *genes), "shared", trace=True)
    admits = [e for e in m.trace if e["event"] == "admit"]
    assert [e["time"] for e in admits] == sorted(e["time"] for e in admits)
    # order compliance among equal arrivals
    rank = {a: i for i, a in enumerate(order)}
    arrival = {a.id: a.arrival_time for a in apps}
    seq = [e["app"] for e in admits]
    for i, x in enumerate(seq):
        for y in seq[i + 1:]:
            if arrival[x] == arrival[y]:
                assert rank[x] < rank[y]
    # one contiguous interval per app
    assert len(seq) == len(set(seq))
    assert run(topo, apps, Schedule(tuple(order), *genes), "shared", trace=True).trace == m.trace


def test_audit_catches_forgeries(one_sensor):
    apps = [app(0, [(0, 1)], 10), app(1, [(0, 1)], 5)]
    assert audit(one_sensor, apps, [], "unshared")
    good = run(one_sensor, apps, Schedule((0, 1)), "unshared", trace=True).trace
    assert audit(one_sensor, apps, good, "unshared")
    over = [
        {"time": 0, "event": "admit", "app": 0, "assignment": {"0": [0, 0]}},
        {"time": 0, "event": "admit", "app": 1, "assignment": {"0": [0, 0]}},
    ]
    assert not audit(one_sensor, apps, over, "unshared")
    assert audit(one_sensor, apps, over, "shared")  # max(1, 1) fits R = 1
    early = [{"time": 3, "event": "release", "app": 0}]
    assert any("inactive" in p for p in audit_report(one_sensor, apps, early, "shared"))
    wrong_time = over[:1] + [{"time": 3, "event": "release", "app": 0}]
    assert not audit(one_sensor, apps, wrong_time, "shared")
    twice = over[:1] + over[:1]
    assert not audit(one_sensor, apps, twice, "shared")


def test_audit_catches_bad_pairs(two_sensors):
    apps = [app(0, [(0, 10)], 10), app(1, [(0, 10)], 10)]
    moved = [
        {"time": 0, "event": "admit", "app": 0, "assignment": {"0": [0, 0]}},
        {"time": 0, "event": "admit", "app": 1, "assignment": {"0": [1, 0]}},
    ]
    assert any("moved" in p for p in audit_report(two_sensors, apps, moved, "shared"))
    bogus = [{"time": 0, "event": "admit", "app": 0, "assignment": {"0": [0, 9]}}]
    assert not audit(two_sensors, apps, bogus, "shared")
    late = [{"time": 0, "event": "admit", "app": 0, "assignment": {"0": [0, 0]}}]
    late_apps = [app(0, [(0, 10)], 10, arrival=5)]
    assert not audit(two_sensors, late_apps, late, "shared")


def test_trace_round_trip(tmp_path, desk):
    topo, apps = desk
    m = greedy.schedule(topo, apps, "fcfs", "unshared", trace=True)
    write_trace(m.trace, tmp_path / "t.jsonl")
    back = read_trace(tmp_path / "t.jsonl")
    assert back == m.trace
    assert audit(topo, apps, back, "unshared")


def test_metrics_from_empty_and_partial():
    apps = [app(0, [(0, 1)], 10, arrival=2, deadline=20), app(1, [(0, 1)], 10, deadline=5)]
    m = metrics_from(apps, {0: 4.0, 1: 0.0}, [])
    assert m.makespan == 14 and m.avg_waiting == 1.0 and m.avg_turnaround == 11.0 and m.success_rate == 0.5
