"""Scenario sweeps: generate, schedule, measure, export.

Run ``r`` of an experiment uses seed ``base_seed + r``. That seed is split
into independent streams for the topology, the workload and the GA, so every
algorithm and mode of a run sees the same instance.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gabas, greedy
from .resources import SharingMode
from .topology import DESK_TOPOLOGY, FULL_TOPOLOGY, TopologyParams, generate_topology
from .workload import DESK_WORKLOAD, FULL_WORKLOAD, WorkloadParams, generate_workload, scenario_sweep

ALGORITHMS = ("gabas", "lmpf", "lmsf", "ltsf", "fcfs", "sjf")
MODES = ("shared", "unshared")

PRESETS = {
    "full": (FULL_TOPOLOGY, FULL_WORKLOAD, 100),
    "desk": (DESK_TOPOLOGY, DESK_WORKLOAD, 20),
}

COLUMNS = (
    "kind", "scenario", "value", "algorithm", "mode", "run_seed",
    "makespan", "avg_waiting", "avg_turnaround", "success_rate", "rejected_count", "wall_clock_ms",
)


def parse_algorithms(names) -> tuple[str, ...]:
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    out = []
    for n in names:
        n = n.strip().lower()
        if n not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {n!r}; expected some of {','.join(ALGORITHMS)}")
        out.append(n)
    if not out:
        raise ValueError("no algorithms given")
    return tuple(out)


def parse_modes(names) -> tuple[str, ...]:
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    out = tuple(SharingMode.parse(n).value for n in names)
    if not out:
        raise ValueError("no modes given")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run. ``scenario=None`` means a single point at the preset itself."""

    scenario: int | None = None
    values: tuple | None = None
    algorithms: tuple[str, ...] = ALGORITHMS
    modes: tuple[str, ...] = MODES
    runs: int = 100
    base_seed: int = 0
    topology: TopologyParams = FULL_TOPOLOGY
    workload: WorkloadParams = FULL_WORKLOAD
    ga: gabas.GaParams = field(default_factory=gabas.GaParams)
    timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        object.__setattr__(self, "algorithms", parse_algorithms(self.algorithms))
        object.__setattr__(self, "modes", parse_modes(self.modes))
        if self.scenario is not None:
            scenario_sweep(self.scenario)

    @classmethod
    def preset(cls, name: str, **kw) -> "ExperimentConfig":
        try:
            topo, work, runs = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}") from None
        kw.setdefault("runs", runs)
        return cls(topology=topo, workload=work, **kw)

    def sweep_values(self) -> tuple:
        if self.scenario is None:
            return self.values or ("",)
        return tuple(self.values) if self.values else scenario_sweep(self.scenario).values

    def params_for(self, value) -> tuple[TopologyParams, WorkloadParams]:
        if self.scenario is None:
            return self.topology, self.workload
        return scenario_sweep(self.scenario).apply(value, self.topology, self.workload)


@dataclass(frozen=True)
class ResultRow:
    kind: str  # "run" or "mean"
    scenario: int | str
    value: object
    algorithm: str
    mode: str
    run_seed: int | str
    makespan: float
    avg_waiting: float
    avg_turnaround: float
    success_rate: float
    rejected_count: float
    wall_clock_ms: float | None = None

    def as_strings(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_seeds(seed: int) -> tuple[int, int, int]:
    """Topology, workload and GA seeds derived from one run seed."""
    a, b, c = np.random.SeedSequence(seed).generate_state(3)
    return int(a), int(b), int(c)


def run_once(
    topo_params: TopologyParams,
    work_params: WorkloadParams,
    seed: int,
    algorithm: str,
    mode: str,
    ga_params: gabas.GaParams = gabas.GaParams(),
    topology=None,
    workload=None,
):
    """Schedule one generated instance; returns (metrics, seconds spent scheduling)."""
    ts, ws, gs = run_seeds(seed)
    topology = topology or generate_topology(topo_params, ts)
    workload = workload if workload is not None else generate_workload(topology, work_params, ws)
    t = time.perf_counter()
    if algorithm == "gabas":
        m = gabas.schedule(topology, workload, mode, ga_params, seed=gs)
    else:
        m = greedy.schedule(topology, workload, algorithm, mode)
    return m, time.perf_counter() - t


def _run_point(args) -> list[ResultRow]:
    cfg, scenario, value, r = args
    seed = cfg.base_seed + r
    topo_params, work_params = cfg.params_for(value)
    ts, ws, _ = run_seeds(seed)
    topology = generate_topology(topo_params, ts)
    workload = generate_workload(topology, work_params, ws)
    rows = []
    for alg in cfg.algorithms:
        for mode in cfg.modes:
            m, secs = run_once(topo_params, work_params, seed, alg, mode, cfg.ga, topology, workload)
            rows.append(ResultRow(
                "run", scenario, value, alg, mode, seed,
                float(m.makespan), float(m.avg_waiting), float(m.avg_turnaround), float(m.success_rate),
                len(m.rejected), secs * 1000.0 if cfg.timing else None,
            ))
    return rows


def _mean(xs) -> float:
    return math.fsum(xs) / len(xs)


def aggregate(rows: list[ResultRow]) -> list[ResultRow]:
    """Mean row per (algorithm, mode) over the given run rows, in first-seen order."""
    groups: dict[tuple[str, str], list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.mode), []).append(row)
    out = []
    for (alg, mode), rs in groups.items():
        timed = [r.wall_clock_ms for r in rs if r.wall_clock_ms is not None]
        out.append(ResultRow(
            "mean", rs[0].scenario, rs[0].value, alg, mode, "",
            _mean([r.makespan for r in rs]),
            _mean([r.avg_waiting for r in rs]),
            _mean([r.avg_turnaround for r in rs]),
            _mean([r.success_rate for r in rs]),
            _mean([float(r.rejected_count) for r in rs]),
            _mean(timed) if len(timed) == len(rs) else None,
        ))
    return out


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """All run rows and per-value mean rows, in (value, run, algorithm, mode) order."""
    scenario = config.scenario if config.scenario is not None else ""
    out: list[ResultRow] = []
    for value in config.sweep_values():
        tasks = [(config, scenario, value, r) for r in range(config.runs)]
        if config.jobs > 1:
            with ProcessPoolExecutor(config.jobs) as pool:
                per_run = list(pool.map(_run_point, tasks))
        else:
            per_run = [_run_point(t) for t in tasks]
        rows = [row for rs in per_run for row in rs]
        out.extend(rows)
        out.extend(aggregate(rows))
    return out


def to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.as_strings())
    return buf.getvalue()


def write_csv(rows: list[ResultRow], path: str | Path) -> None:
    Path(path).write_text(to_csv(rows), encoding="utf-8")


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


