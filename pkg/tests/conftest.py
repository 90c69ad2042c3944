import pytest

from wsnsched.harness import run_seeds
from wsnsched.topology import DESK_TOPOLOGY, BaseStation, MonitoringPoint, SensorNode, Topology, generate_topology
from wsnsched.workload import DESK_WORKLOAD, Application, Request, generate_workload


def make_topology(points, sensors, bases, link_bandwidth=100.0, alpha=1.0, beta=1.0):
    """points: (x, y[, type]); sensors: (x, y, sensing, comm[, cap]); bases: (x, y[, P])."""
    pts = tuple(MonitoringPoint(i, p[0], p[1], p[2] if len(p) > 2 else 0) for i, p in enumerate(points))
    sns = tuple(
        SensorNode(i, s[0], s[1], s[2], s[3], s[4] if len(s) > 4 else 100.0) for i, s in enumerate(sensors)
    )
    bss = tuple(BaseStation(i, b[0], b[1], b[2] if len(b) > 2 else 1000.0) for i, b in enumerate(bases))
    return Topology(width=1000, height=1000, points=pts, sensors=sns, bases=bss,
                    alpha=alpha, beta=beta, link_bandwidth=link_bandwidth)


def app(id, reqs, duration, arrival=0.0, deadline=float("inf"), batch=0):
    return Application(id, tuple(Request(k, r) for k, r in reqs), float(duration), batch, float(arrival), deadline)


def desk_instance(seed):
    ts, ws, _ = run_seeds(seed)
    topo = generate_topology(DESK_TOPOLOGY, ts)
    return topo, generate_workload(topo, DESK_WORKLOAD, ws)


@pytest.fixture
def one_sensor():
    """One point, one unit-capacity sensor, one base with ample capacity."""
    return make_topology([(0, 0)], [(0, 10, 50, 100, 1.0)], [(0, 20, 1000.0)])


@pytest.fixture
def two_sensors():
    """One point covered by sensors 0 and 1, each reaching both bases."""
    return make_topology(
        [(0, 0, 1)],
        [(0, 10, 50, 200, 100.0), (10, 0, 50, 200, 100.0)],
        [(0, 50, 1000.0), (50, 0, 1000.0)],
    )


@pytest.fixture(scope="session")
def desk():
    return desk_instance(7)


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def report(request):
    """Record a one-line verdict for an acceptance criterion."""

    def _report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines[n] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.acceptance_lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
