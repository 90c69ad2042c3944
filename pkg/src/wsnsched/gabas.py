"""Genetic search over admission order and per-point (sensor, base) genes.

An individual carries three integer vectors: the application order, and for
every monitoring point a sensor gene and a base-station gene. Fitness is the
negated makespan of simulating that individual. Sensor and base genes of a
point are always inherited and mutated together so a pair never breaks the
coverage/reach structure.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _engine
from .resources import SharingMode
from .simulator import RunMetrics, Schedule, run
from .topology import Topology
from .workload import Application


@dataclass(frozen=True)
class GaParams:
    population_size: int = 200
    tournament_fraction: float = 0.05
    uniform_rate: float = 0.5
    mutation_rate: float = 0.05
    stagnation_limit: int = 7
    elitism: bool = True

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be >= 1")
        for name in ("tournament_fraction", "uniform_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def tournament_size(self) -> int:
        return max(1, math.ceil(self.tournament_fraction * self.population_size))


@dataclass
class Chromosome:
    app_genes: np.ndarray
    sensor_genes: np.ndarray
    bs_genes: np.ndarray

    def copy(self) -> "Chromosome":
        return Chromosome(self.app_genes.copy(), self.sensor_genes.copy(), self.bs_genes.copy())

    def schedule(self) -> Schedule:
        return Schedule(
            tuple(int(a) for a in self.app_genes),
            tuple(int(s) for s in self.sensor_genes),
            tuple(int(b) for b in self.bs_genes),
        )

    def __eq__(self, other):
        return (
            isinstance(other, Chromosome)
            and np.array_equal(self.app_genes, other.app_genes)
            and np.array_equal(self.sensor_genes, other.sensor_genes)
            and np.array_equal(self.bs_genes, other.bs_genes)
        )


class GeneSpace:
    """Per-point candidate sensors and per-sensor reachable bases, as CSR arrays."""

    def __init__(self, topology: Topology):
        self.topology = topology
        inst = _engine.build_instance(topology, [])
        self.cand_ptr, self.cand_idx = inst.cand_ptr, inst.cand_idx
        self.reach_ptr, self.reach_idx = inst.reach_ptr, inst.reach_idx
        self.n_cand = np.diff(self.cand_ptr)
        self.n_reach = np.diff(self.reach_ptr)

    def draw(self, rng: np.random.Generator, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Uniform sensor among candidates, then uniform base among its reach."""
        nc = self.n_cand[points]
        u = rng.random(len(points))
        v = rng.random(len(points))
        ok = nc > 0
        s = np.full(len(points), -1, dtype=np.int64)
        b = np.full(len(points), -1, dtype=np.int64)
        si = (u[ok] * nc[ok]).astype(np.int64)
        s[ok] = self.cand_idx[self.cand_ptr[points[ok]] + si]
        nr = self.n_reach[s[ok]]
        bi = (v[ok] * nr).astype(np.int64)
        b[ok] = self.reach_idx[self.reach_ptr[s[ok]] + bi]
        return s, b


def is_valid(chrom: Chromosome, topology: Topology, app_ids: Sequence[int]) -> bool:
    if sorted(chrom.app_genes.tolist()) != sorted(app_ids):
        return False
    if len(chrom.sensor_genes) != topology.n_points or len(chrom.bs_genes) != topology.n_points:
        return False
    for k in range(topology.n_points):
        s, b = int(chrom.sensor_genes[k]), int(chrom.bs_genes[k])
        if not topology.candidates[k]:
            if (s, b) != (-1, -1):
                return False
        elif s not in topology.candidates[k] or b not in topology.reach[s]:
            return False
    return True


def init_population(
    topology: Topology,
    workload: Sequence[Application],
    params: GaParams,
    rng: np.random.Generator,
    ignore: frozenset[int] = frozenset(),
    space: GeneSpace | None = None,
) -> list[Chromosome]:
    """Random individuals: shuffled id list, uniform pair per point.

    ``ignore`` lists applications already known to be unservable; their
    points are not required to have candidate sensors.
    """
    for a in workload:
        if a.id in ignore:
            continue
        for k in a.point_ids:
            if not topology.candidates[k]:
                raise ValueError(f"monitoring point {k} (application {a.id}) has no serving sensor")
    space = space or GeneSpace(topology)
    ids = np.array(sorted(a.id for a in workload), dtype=np.int64)
    points = np.arange(topology.n_points)
    pop = []
    for _ in range(params.population_size):
        genes = ids.copy()
        rng.shuffle(genes)
        s, b = space.draw(rng, points)
        pop.append(Chromosome(genes, s, b))
    return pop


class FitnessEvaluator:
    """Negated makespan of a chromosome, computed by the compiled engine.

    Builds the engine instance and the idle-network rejection mask once and
    reuses them across every evaluation of an evolution.
    """

    def __init__(self, topology: Topology, workload: Sequence[Application], mode: SharingMode | str):
        self.topology = topology
        self.apps = sorted(workload, key=lambda a: a.id)
        self.mode = SharingMode.parse(mode)
        self.shared = self.mode is SharingMode.SHARED
        self.instance = _engine.build_instance(topology, self.apps) if self.apps else None
        self.rejected = (
            _engine.rejections(self.instance, self.shared) if self.apps else np.zeros(0, dtype=bool)
        )
        self.rejected_ids = frozenset(a.id for a, r in zip(self.apps, self.rejected) if r)
        self._pos = np.empty(max((a.id for a in self.apps), default=-1) + 1, dtype=np.int64)
        for i, a in enumerate(self.apps):
            self._pos[a.id] = i
        self.evaluations = 0

    def __call__(self, chrom: Chromosome) -> float:
        if not self.apps:
            return 0.0
        self.evaluations += 1
        rank = np.empty(len(self.apps), dtype=np.int64)
        rank[self._pos[chrom.app_genes]] = np.arange(len(self.apps))
        t0, rejected, *_ = _engine.run_instance(
            self.instance, rank, self.shared, (chrom.sensor_genes, chrom.bs_genes), rejected=self.rejected
        )
        admitted = ~rejected
        if not admitted.any():
            return 0.0
        return -float(np.max(t0[admitted] + self.instance.duration[admitted]))


def fitness(chrom: Chromosome, topology: Topology, workload: Sequence[Application], mode) -> float:
    """``-makespan`` of the schedule encoded by ``chrom``."""
    return -run(topology, workload, chrom.schedule(), mode).makespan


def tournament_select(
    population: Sequence[Chromosome],
    fitnesses: Sequence[float],
    params: GaParams,
    rng: np.random.Generator,
) -> Chromosome:
    """Best of a with-replacement sample; an equal score displaces the incumbent."""
    if not population:
        raise ValueError("empty population")
    size = max(1, math.ceil(params.tournament_fraction * len(population)))
    picks = rng.integers(len(population), size=size)
    best = None
    best_score = -math.inf
    for i in picks:
        if best is None or best_score <= fitnesses[i]:
            best, best_score = i, fitnesses[i]
    return population[best]


def repair(genes: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Overwrite second (and later) occurrences with missing ids, ascending."""
    out = genes.copy()
    _, first = np.unique(out, return_index=True)
    dup = np.ones(len(out), dtype=bool)
    dup[first] = False
    missing = np.setdiff1d(ids, out)
    out[np.flatnonzero(dup)] = missing
    return out


def crossover(
    parent1: Chromosome,
    parent2: Chromosome,
    params: GaParams,
    rng: np.random.Generator,
    ids: np.ndarray | None = None,
) -> Chromosome:
    if ids is None:
        ids = np.sort(parent1.app_genes)
    take1 = rng.random(len(parent1.app_genes)) < params.uniform_rate
    apps = repair(np.where(take1, parent1.app_genes, parent2.app_genes), ids)
    take1 = rng.random(len(parent1.sensor_genes)) < params.uniform_rate
    return Chromosome(
        apps,
        np.where(take1, parent1.sensor_genes, parent2.sensor_genes),
        np.where(take1, parent1.bs_genes, parent2.bs_genes),
    )


def mutate(
    chrom: Chromosome,
    topology: Topology,
    params: GaParams,
    rng: np.random.Generator,
    space: GeneSpace | None = None,
) -> Chromosome:
    out = chrom.copy()
    n = len(out.app_genes)
    if rng.random() < params.mutation_rate and n:
        x, y = rng.integers(n, size=2)
        out.app_genes[[x, y]] = out.app_genes[[y, x]]
    hit = np.flatnonzero(rng.random(len(out.sensor_genes)) < params.mutation_rate)
    if len(hit):
        space = space or GeneSpace(topology)
        s, b = space.draw(rng, hit)
        out.sensor_genes[hit] = s
        out.bs_genes[hit] = b
    return out


@dataclass
class GaResult:
    best: Chromosome
    fitness: float
    generations: int
    history: list[tuple[int, float, float]] = field(default_factory=list)
    evaluations: int = 0

    @property
    def makespan(self) -> float:
        return -self.fitness

    def write_log(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "best_fitness", "mean_fitness"])
            for g, best, mean in self.history:
                w.writerow([g, repr(best), repr(mean)])


def evolve(
    topology: Topology,
    workload: Sequence[Application],
    mode: SharingMode | str = SharingMode.SHARED,
    params: GaParams = GaParams(),
    seed: int = 0,
) -> GaResult:
    """Run the GA until the best fitness stalls for ``stagnation_limit`` generations."""
    rng = np.random.default_rng(seed)
    evaluate = FitnessEvaluator(topology, workload, mode)
    space = GeneSpace(topology)
    ids = np.array(sorted(a.id for a in workload), dtype=np.int64)

    pop = init_population(topology, workload, params, rng, ignore=evaluate.rejected_ids, space=space)
    fit = np.array([evaluate(c) for c in pop])
    top = int(np.argmax(fit))
    best, best_fit = pop[top].copy(), float(fit[top])
    history = [(0, float(fit.max()), float(fit.mean()))]
    generation = stall = 0
    while stall < params.stagnation_limit:
        mates = [tournament_select(pop, fit, params, rng) for _ in pop]
        offspring = [crossover(x, y, params, rng, ids) for x, y in zip(pop, mates)]
        offspring = [mutate(z, topology, params, rng, space) for z in offspring]
        off_fit = np.array([evaluate(c) for c in offspring])
        if params.elitism:
            elite = int(np.argmax(fit))
            worst = int(np.argmin(off_fit))
            offspring[worst] = pop[elite].copy()
            off_fit[worst] = fit[elite]
        pop, fit = offspring, off_fit
        generation += 1
        top = int(np.argmax(fit))
        history.append((generation, float(fit[top]), float(fit.mean())))
        if fit[top] > best_fit:
            best, best_fit = pop[top].copy(), float(fit[top])
            stall = 0
        else:
            stall += 1
    return GaResult(best, best_fit, generation, history, evaluate.evaluations)


def schedule(
    topology: Topology,
    workload: Sequence[Application],
    mode: SharingMode | str = SharingMode.SHARED,
    params: GaParams = GaParams(),
    seed: int = 0,
    trace: bool = False,
) -> RunMetrics:
    """Evolve a schedule and simulate the winner."""
    result = evolve(topology, workload, mode, params, seed)
    return run(topology, workload, result.best.schedule(), mode, trace=trace)
