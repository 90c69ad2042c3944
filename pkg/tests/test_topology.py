import json
import math

import pytest

from wsnsched.topology import (
    FULL_TOPOLOGY,
    Topology,
    TopologyError,
    TopologyParams,
    coverage_of,
    generate_topology,
    with_overrides,
)

from conftest import make_topology


def _dist(a, b):
    return math.hypot(a.x - b.x, a.y - b.y)


def test_full_size_defaults_sizes():
    topo = generate_topology(FULL_TOPOLOGY, 1)
    assert (topo.n_sensors, topo.n_bases, topo.n_points) == (250, 30, 300)
    assert topo.width == topo.height == 1000


def test_empty_topology():
    topo = generate_topology(TopologyParams(width=10, height=10, n_points=0, n_sensors=0, n_bases=0), 3)
    assert topo.points == topo.sensors == topo.bases == ()
    assert topo.links == ()


def test_pigeonhole_error():
    with pytest.raises(TopologyError):
        generate_topology(TopologyParams(width=1, height=1, n_points=5, n_sensors=0, n_bases=0,
                                         require_coverage=False), 0)


def test_determinism_and_seed_sensitivity():
    p = TopologyParams(n_points=60, n_sensors=50, n_bases=8)
    a, b, c = generate_topology(p, 11), generate_topology(p, 11), generate_topology(p, 12)
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()


def test_geometry_soundness_exhaustive_rescan():
    topo = generate_topology(TopologyParams(n_points=80, n_sensors=70, n_bases=10), 5)
    coords = [(e.x, e.y) for e in (*topo.points, *topo.sensors, *topo.bases)]
    assert len(coords) == len(set(coords))
    for e in (*topo.points, *topo.sensors, *topo.bases):
        assert 0 <= e.x < topo.width and 0 <= e.y < topo.height
    for p in topo.points:
        expect = [s.id for s in topo.sensors if _dist(p, s) <= s.sensing_range]
        assert list(topo.coverage[p.id]) == expect
        assert set(topo.candidates[p.id]) <= set(expect)
        assert topo.candidates[p.id], "require_coverage leaves every point servable"
    for s in topo.sensors:
        assert list(topo.reach[s.id]) == [b.id for b in topo.bases if _dist(s, b) <= s.comm_range]
        assert 30 <= s.sensing_range <= 50 and 200 <= s.comm_range <= 250
    assert {(l.sensor_id, l.base_id) for l in topo.links} == {(s, b) for s, bs in topo.reach.items() for b in bs}
    assert all(l.bandwidth == 100.0 for l in topo.links)


def test_unreachable_sensor_not_a_candidate():
    topo = make_topology([(0, 0)], [(0, 10, 50, 5), (10, 0, 50, 200)], [(0, 150)])
    assert topo.coverage[0] == (0, 1)
    assert topo.reach[0] == ()
    assert topo.candidates[0] == (1,)
    assert topo.pairs_for(0) == [(1, 0)]


def test_coverage_examples():
    inside = make_topology([(0, 0)], [(0, 40, 50, 100)], [])
    outside = make_topology([(0, 0)], [(0, 60, 50, 100)], [])
    assert coverage_of(inside, 0) == (0,)
    assert coverage_of(outside, 0) == ()
    # ids come back sorted whatever the geometry
    topo = make_topology([(0, 0)], [(500, 500, 10, 10)] * 3 + [(0, 5, 50, 1)] + [(500, 600, 10, 10)] * 3
                         + [(5, 0, 50, 1)], [])
    assert coverage_of(topo, 0) == (3, 7)
    with pytest.raises(KeyError):
        coverage_of(topo, 99)


def test_boundary_is_inclusive():
    topo = make_topology([(0, 0)], [(30, 40, 50, 50)], [(60, 80)])
    assert topo.coverage[0] == (0,)
    assert topo.reach[0] == (0,)


def test_json_round_trip(tmp_path):
    topo = generate_topology(TopologyParams(n_points=20, n_sensors=20, n_bases=4), 9)
    path = tmp_path / "t.json"
    topo.save(path)
    back = Topology.load(path)
    assert back.to_dict() == topo.to_dict()
    assert back.candidates == topo.candidates
    doc = json.loads(path.read_text())
    assert {"region", "points", "sensors", "bases", "capacities", "seed", "params"} <= set(doc)


def test_default_capacities_follow_coefficients():
    p = with_overrides(TopologyParams(n_points=5, n_sensors=5, n_bases=2), alpha=2.0, beta=0.5)
    topo = generate_topology(p, 0)
    assert topo.link_bandwidth == 200.0
    assert all(b.processing_capacity == 500.0 for b in topo.bases)
    assert all(s.sensing_capacity == 100.0 for s in topo.sensors)
