"""Application sets, batch arrivals, deadlines and the six scenario sweeps."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .topology import Topology, TopologyParams

# closed rate interval per data type
RATE_INTERVALS: dict[int, tuple[float, float]] = {0: (5.0, 20.0), 1: (15.0, 40.0), 2: (25.0, 60.0)}

# Rates are kept on a 1e-3 grid so resource ledgers can run in exact integers.
RATE_DECIMALS = 3


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class Request:
    point_id: int
    rate: float


@dataclass(frozen=True)
class Application:
    id: int
    requests: tuple[Request, ...]
    duration: float
    batch: int = 0
    arrival_time: float = 0.0
    deadline: float = float("inf")

    @property
    def point_ids(self) -> tuple[int, ...]:
        return tuple(r.point_id for r in self.requests)

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(r.rate for r in self.requests)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["requests"] = [asdict(r) for r in self.requests]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Application":
        d = dict(d)
        d["requests"] = tuple(Request(**r) for r in d["requests"])
        return cls(**d)


@dataclass(frozen=True)
class WorkloadParams:
    n_apps: int = 1000
    n_batches: int = 25
    points_per_app: tuple[int, int] = (1, 3)
    duration: tuple[int, int] = (50, 150)
    slack: tuple[int, int] = (100, 200)
    batch_interval: float = 0.0
    equal_batches: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points_per_app"] = list(self.points_per_app)
        d["duration"] = list(self.duration)
        d["slack"] = list(self.slack)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WorkloadParams":
        d = dict(d)
        for key in ("points_per_app", "duration", "slack"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def deadline_for(arrival_time: float, duration: float, slack: float) -> float:
    return arrival_time + duration + slack


def _batches(rng: np.random.Generator, params: WorkloadParams) -> np.ndarray:
    n, nb = params.n_apps, params.n_batches
    if params.equal_batches:
        # round-robin then shuffle: sizes differ by at most one
        b = np.arange(n) % nb
        rng.shuffle(b)
        return b
    return rng.integers(nb, size=n)


def generate_workload(topology: Topology, params: WorkloadParams, seed: int) -> list[Application]:
    lo, hi = params.points_per_app
    if not 1 <= lo <= hi:
        raise WorkloadError(f"bad points_per_app interval {params.points_per_app}")
    if params.n_batches < 1:
        raise WorkloadError("n_batches must be >= 1")
    if params.n_apps and topology.n_points < 1:
        raise WorkloadError("topology has no monitoring points")
    if params.n_apps and hi > topology.n_points:
        raise WorkloadError(
            f"applications may request {hi} points but the topology has {topology.n_points}"
        )
    rng = np.random.default_rng(seed)
    batches = _batches(rng, params)
    apps = []
    for j in range(params.n_apps):
        count = int(rng.integers(lo, hi + 1))
        pts = sorted(int(k) for k in rng.choice(topology.n_points, size=count, replace=False))
        reqs = []
        for k in pts:
            rlo, rhi = RATE_INTERVALS[topology.points[k].data_type]
            reqs.append(Request(k, round(float(rng.uniform(rlo, rhi)), RATE_DECIMALS)))
        duration = float(rng.integers(params.duration[0], params.duration[1] + 1))
        slack = float(rng.integers(params.slack[0], params.slack[1] + 1))
        batch = int(batches[j])
        arrival = batch * params.batch_interval
        apps.append(
            Application(
                id=j,
                requests=tuple(reqs),
                duration=duration,
                batch=batch,
                arrival_time=arrival,
                deadline=deadline_for(arrival, duration, slack),
            )
        )
    return apps


def save_workload(apps: list[Application], path: str | Path, meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "applications": [a.to_dict() for a in apps]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_workload(path: str | Path) -> list[Application]:
    doc = json.loads(Path(path).read_text())
    return [Application.from_dict(a) for a in doc["applications"]]


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment sweep.

    ``swept_parameter`` names the knob that takes each entry of ``values``;
    :meth:`apply` turns a value into concrete topology and workload params.
    """

    scenario_id: int
    swept_parameter: str
    values: tuple
    title: str

    def apply(self, value, topo: TopologyParams, work: WorkloadParams):
        name = self.swept_parameter
        if name == "n_apps":
            return topo, replace(work, n_apps=int(value))
        if name == "n_points":
            return replace(topo, n_points=int(value)), work
        if name == "points_per_app":
            return topo, replace(work, points_per_app=(int(value), int(value)))
        if name == "comm_range":
            return replace(topo, comm_range=(float(value), float(value))), work
        if name == "sensing_range":
            return replace(topo, sensing_range=(float(value), float(value))), work
        if name == "n_batches":
            return topo, replace(work, n_batches=int(value), equal_batches=True)
        raise WorkloadError(f"unknown swept parameter {name!r}")


_SCENARIOS = {
    1: ("n_apps", tuple(range(500, 1501, 100)), "Application Count"),
    2: ("n_points", tuple(range(50, 251, 25)), "Monitoring Point Count"),
    3: ("points_per_app", tuple(range(1, 8)), "Monitoring Point Count per Application"),
    4: ("comm_range", tuple(range(50, 251, 50)), "Communication Range"),
    5: ("sensing_range", tuple(range(30, 51, 5)), "Sensing Range"),
    6: ("n_batches", (1, 2, 5, 10, 20, 25), "Batch Count"),
}


def scenario_sweep(scenario_id: int) -> ScenarioConfig:
    try:
        name, values, title = _SCENARIOS[int(scenario_id)]
    except (KeyError, ValueError):
        raise WorkloadError(f"unknown scenario {scenario_id!r}; expected 1..6") from None
    return ScenarioConfig(int(scenario_id), name, values, title)


FULL_WORKLOAD = WorkloadParams()
DESK_WORKLOAD = WorkloadParams(n_apps=200)
