"""Network model: monitoring points, sensor nodes, base stations and links.

A :class:`Topology` is immutable once built. Coverage sets and reach sets are
derived from geometry at construction time and kept in id order so that every
consumer iterates them deterministically.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MonitoringPoint:
    id: int
    x: int
    y: int
    data_type: int


@dataclass(frozen=True)
class SensorNode:
    id: int
    x: int
    y: int
    sensing_range: float
    comm_range: float
    sensing_capacity: float


@dataclass(frozen=True)
class BaseStation:
    id: int
    x: int
    y: int
    processing_capacity: float


@dataclass(frozen=True)
class CandidateLink:
    sensor_id: int
    base_id: int
    bandwidth: float


@dataclass(frozen=True)
class TopologyParams:
    """Knobs for :func:`generate_topology`.

    Ranges are closed intervals ``(low, high)``; pass ``(v, v)`` to pin a value.
    ``require_coverage`` keeps drawing a monitoring point until at least one
    sensor that can reach a base station covers it.
    """

    width: int = 1000
    height: int = 1000
    n_points: int = 300
    n_sensors: int = 250
    n_bases: int = 30
    comm_range: tuple[float, float] = (200.0, 250.0)
    sensing_range: tuple[float, float] = (30.0, 50.0)
    n_data_types: int = 3
    sensing_capacity: float = 100.0
    alpha: float = 1.0
    beta: float = 1.0
    link_bandwidth: float | None = None  # default 100 * alpha
    processing_capacity: float | None = None  # default 1000 * beta
    require_coverage: bool = True

    def resolved_bandwidth(self) -> float:
        return 100.0 * self.alpha if self.link_bandwidth is None else float(self.link_bandwidth)

    def resolved_processing(self) -> float:
        return 1000.0 * self.beta if self.processing_capacity is None else float(self.processing_capacity)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["comm_range"] = list(self.comm_range)
        d["sensing_range"] = list(self.sensing_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TopologyParams":
        d = dict(d)
        for key in ("comm_range", "sensing_range"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


def _dist(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(ax - bx, ay - by)


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    width: int
    height: int
    points: tuple[MonitoringPoint, ...]
    sensors: tuple[SensorNode, ...]
    bases: tuple[BaseStation, ...]
    alpha: float = 1.0
    beta: float = 1.0
    link_bandwidth: float = 100.0
    seed: int | None = None
    params: TopologyParams | None = None
    links: tuple[CandidateLink, ...] = field(init=False, repr=False)
    coverage: dict[int, tuple[int, ...]] = field(init=False, repr=False)
    candidates: dict[int, tuple[int, ...]] = field(init=False, repr=False)
    reach: dict[int, tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        for i, p in enumerate(self.points):
            if p.id != i:
                raise TopologyError(f"point ids must be 0..n-1 in order, got {p.id} at {i}")
        for i, s in enumerate(self.sensors):
            if s.id != i:
                raise TopologyError(f"sensor ids must be 0..n-1 in order, got {s.id} at {i}")
        for i, b in enumerate(self.bases):
            if b.id != i:
                raise TopologyError(f"base ids must be 0..n-1 in order, got {b.id} at {i}")
        reach: dict[int, tuple[int, ...]] = {}
        links = []
        for s in self.sensors:
            rs = tuple(
                b.id for b in self.bases if _dist(s.x, s.y, b.x, b.y) <= s.comm_range
            )
            reach[s.id] = rs
            links.extend(CandidateLink(s.id, b, self.link_bandwidth) for b in rs)
        coverage = {}
        for p in self.points:
            coverage[p.id] = tuple(
                s.id for s in self.sensors if _dist(p.x, p.y, s.x, s.y) <= s.sensing_range
            )
        # sensors without a base in range cannot serve anything
        candidates = {k: tuple(s for s in cov if reach[s]) for k, cov in coverage.items()}
        object.__setattr__(self, "links", tuple(links))
        object.__setattr__(self, "reach", reach)
        object.__setattr__(self, "coverage", coverage)
        object.__setattr__(self, "candidates", candidates)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def pairs_for(self, point_id: int) -> list[tuple[int, int]]:
        """Every (sensor, base) pair able to serve ``point_id``, in id order."""
        return [(s, b) for s in self.candidates[point_id] for b in self.reach[s]]

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "region": {"width": self.width, "height": self.height},
            "capacities": {
                "alpha": self.alpha,
                "beta": self.beta,
                "link_bandwidth": self.link_bandwidth,
            },
            "seed": self.seed,
            "params": None if self.params is None else self.params.to_dict(),
            "points": [asdict(p) for p in self.points],
            "sensors": [asdict(s) for s in self.sensors],
            "bases": [asdict(b) for b in self.bases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        if d.get("schema") != SCHEMA_VERSION:
            raise TopologyError(f"unsupported topology schema {d.get('schema')!r}")
        caps = d["capacities"]
        return cls(
            width=d["region"]["width"],
            height=d["region"]["height"],
            points=tuple(MonitoringPoint(**p) for p in d["points"]),
            sensors=tuple(SensorNode(**s) for s in d["sensors"]),
            bases=tuple(BaseStation(**b) for b in d["bases"]),
            alpha=caps["alpha"],
            beta=caps["beta"],
            link_bandwidth=caps["link_bandwidth"],
            seed=d.get("seed"),
            params=None if d.get("params") is None else TopologyParams.from_dict(d["params"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))


def coverage_of(topology: Topology, point_id: int) -> tuple[int, ...]:
    """Sensors whose sensing range contains ``point_id``, sorted by id."""
    try:
        return topology.coverage[point_id]
    except KeyError:
        raise KeyError(f"unknown monitoring point {point_id}") from None


def _uniform(rng: np.random.Generator, lo_hi: tuple[float, float]) -> float:
    lo, hi = lo_hi
    if hi < lo:
        raise TopologyError(f"empty interval {lo_hi}")
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def generate_topology(params: TopologyParams, seed: int, max_tries: int = 200_000) -> Topology:
    """Random topology on an integer grid, reproducible from ``(params, seed)``."""
    n_total = params.n_points + params.n_sensors + params.n_bases
    cells = params.width * params.height
    if n_total > cells:
        raise TopologyError(
            f"region {params.width}x{params.height} has {cells} grid cells, "
            f"cannot place {n_total} distinct elements"
        )
    rng = np.random.default_rng(seed)
    taken: set[tuple[int, int]] = set()

    def draw() -> tuple[int, int]:
        for _ in range(max_tries):
            xy = (int(rng.integers(params.width)), int(rng.integers(params.height)))
            if xy not in taken:
                return xy
        raise TopologyError("could not find a free grid cell")

    bases = []
    for b in range(params.n_bases):
        x, y = draw()
        taken.add((x, y))
        bases.append(BaseStation(b, x, y, params.resolved_processing()))

    sensors = []
    for s in range(params.n_sensors):
        x, y = draw()
        taken.add((x, y))
        sensors.append(
            SensorNode(
                s,
                x,
                y,
                sensing_range=_uniform(rng, params.sensing_range),
                comm_range=_uniform(rng, params.comm_range),
                sensing_capacity=params.sensing_capacity,
            )
        )

    serving = [
        s for s in sensors
        if any(_dist(s.x, s.y, b.x, b.y) <= s.comm_range for b in bases)
    ]
    if params.require_coverage and params.n_points and not serving:
        raise TopologyError("no sensor reaches a base station; cannot cover any point")

    points = []
    for k in range(params.n_points):
        for _ in range(max_tries):
            x, y = draw()
            if not params.require_coverage or any(
                _dist(x, y, s.x, s.y) <= s.sensing_range for s in serving
            ):
                break
        else:
            raise TopologyError(f"could not place covered monitoring point {k}")
        taken.add((x, y))
        points.append(MonitoringPoint(k, x, y, int(rng.integers(params.n_data_types))))

    return Topology(
        width=params.width,
        height=params.height,
        points=tuple(points),
        sensors=tuple(sensors),
        bases=tuple(bases),
        alpha=params.alpha,
        beta=params.beta,
        link_bandwidth=params.resolved_bandwidth(),
        seed=seed,
        params=params,
    )


FULL_TOPOLOGY = TopologyParams()
DESK_TOPOLOGY = TopologyParams(n_points=100, n_sensors=100, n_bases=15)


def with_overrides(params: TopologyParams, **kw) -> TopologyParams:
    return replace(params, **kw)
