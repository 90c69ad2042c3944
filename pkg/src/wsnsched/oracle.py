"""Exact answers for small instances.

Two independent routes to the optimal makespan over every (admission order,
per-point gene) schedule:

* :func:`exhaustive_optimal` literally enumerates orders x gene vectors and
  simulates each one;
* :func:`brute_force_optimal` explores the same space as a memoised search in
  which genes are fixed lazily and interchangeable idle (sensor, base) pairs
  are tried only once.

Plus the multiway-number-partitioning construction, whose optimum is known
independently through :func:`mnp_optimal`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _engine
from .resources import RATE_SCALE, NetworkState, SharingMode, servable_alone, to_units
from .topology import BaseStation, MonitoringPoint, SensorNode, Topology, TopologyParams, generate_topology
from .workload import RATE_INTERVALS, Application, Request

MAX_APPS = 10
MAX_EXHAUSTIVE_APPS = 8
MAX_CHOICES = 4
MAX_MNP = 14


class GuardError(ValueError):
    """Instance too large for exact enumeration."""


def _requested_points(apps) -> list[int]:
    return sorted({k for a in apps for k in a.point_ids})


def _guard(topology: Topology, apps, max_apps: int) -> None:
    if len(apps) > max_apps:
        raise GuardError(f"{len(apps)} applications exceed the exact-search limit of {max_apps}")
    for k in _requested_points(apps):
        n = len(topology.pairs_for(k))
        if n > MAX_CHOICES:
            raise GuardError(f"point {k} has {n} (sensor, base) choices, limit is {MAX_CHOICES}")


def exhaustive_optimal(topology: Topology, workload: Sequence[Application], mode=SharingMode.SHARED) -> float:
    """Minimum makespan over all orders and gene vectors, by plain enumeration."""
    mode = SharingMode.parse(mode)
    apps = sorted(workload, key=lambda a: a.id)
    _guard(topology, apps, MAX_EXHAUSTIVE_APPS)
    if not apps:
        return 0.0
    shared = mode is SharingMode.SHARED
    inst = _engine.build_instance(topology, apps)
    rejected = _engine.rejections(inst, shared)
    pts = _requested_points(apps)
    choices = [topology.pairs_for(k) or [(-1, -1)] for k in pts]
    gene_s = -np.ones(topology.n_points, dtype=np.int64)
    gene_b = -np.ones(topology.n_points, dtype=np.int64)
    best = math.inf
    n = len(apps)
    ranks = [np.array(p, dtype=np.int64) for p in itertools.permutations(range(n))]
    for combo in itertools.product(*choices):
        for k, (s, b) in zip(pts, combo):
            gene_s[k], gene_b[k] = s, b
        for rank in ranks:
            t0, rej, *_ = _engine.run_instance(inst, rank, shared, (gene_s, gene_b), rejected=rejected)
            ok = ~rej
            span = float(np.max(t0[ok] + inst.duration[ok])) if ok.any() else 0.0
            best = min(best, span)
    return best


# -- memoised search ----------------------------------------------------------

class _Search:
    def __init__(self, topology: Topology, apps: list[Application], mode: SharingMode):
        self.topo = topology
        self.mode = mode
        self.apps = {a.id: a for a in apps}
        self.pts = {a.id: a.point_ids for a in apps}
        self.state = NetworkState(topology, mode)
        self.memo: dict = {}
        self.nodes = 0
        # apps with identical requests and duration are interchangeable
        self.signature = {a.id: (a.requests, a.duration) for a in apps}
        self.area = {a.id: topology.beta * sum(to_units(r) for r in a.rates) * a.duration for a in apps}
        # integer arrivals and durations keep every event time integral
        self.integral = all(float(a.duration).is_integer() and float(a.arrival_time).is_integer() for a in apps)
        self.capacity = sum(b.processing_capacity for b in topology.bases) * RATE_SCALE

    def _sigma_ok(self, s1, b1, s2, b2, touched_s, touched_b, needed_points) -> bool:
        """Whether swapping s1<->s2 and b1<->b2 maps the remaining problem onto itself."""
        topo = self.topo
        smap = {s1: s2, s2: s1}
        bmap = {b1: b2, b2: b1}
        sig_s = lambda x: smap.get(x, x)  # noqa: E731
        sig_b = lambda x: bmap.get(x, x)  # noqa: E731
        if any(sig_s(x) != x for x in touched_s) or any(sig_b(x) != x for x in touched_b):
            return False
        if topo.sensors[s1].sensing_capacity != topo.sensors[s2].sensing_capacity:
            return False
        if topo.bases[b1].processing_capacity != topo.bases[b2].processing_capacity:
            return False
        for x in range(topo.n_sensors):
            if {sig_b(b) for b in topo.reach[x]} != set(topo.reach[sig_s(x)]):
                return False
        for k in needed_points:
            cand = set(topo.candidates[k])
            if {sig_s(x) for x in cand} != cand:
                return False
        return True

    def _gene_options(self, k, genes, needed_points):
        """Candidate pairs for point ``k`` with symmetric idle pairs collapsed.

        Pairs with the most spare capacity come first, so the first descent
        already yields a good incumbent.
        """
        live = [g for p, g in genes.items() if p in needed_points] + list(self.state.assignment.values())
        touched_s = {s for s, _ in live}
        touched_b = {b for _, b in live}
        loads = self.state.loads
        pairs = sorted(
            self.topo.pairs_for(k),
            key=lambda sb: (loads.sensor.get(sb[0], 0) + loads.base.get(sb[1], 0), sb),
        )
        reps: list[tuple[int, int]] = []
        for s, b in pairs:
            fresh = s not in touched_s and b not in touched_b
            if fresh and any(
                rs not in touched_s and rb not in touched_b
                and self._sigma_ok(s, b, rs, rb, touched_s, touched_b, needed_points)
                for rs, rb in reps
            ):
                continue
            reps.append((s, b))
        return reps

    def _gene_combos(self, ks, genes, needed_points):
        if not ks:
            yield {}
            return
        k, rest = ks[0], ks[1:]
        for pair in self._gene_options(k, genes, needed_points):
            genes[k] = pair
            for tail in self._gene_combos(rest, genes, needed_points):
                yield {k: pair, **tail}
            del genes[k]

    def _key(self, t, remaining, genes):
        # Running applications matter only through finish time and footprint;
        # a point's identity matters only if someone else still uses it.
        needed = {k for j in remaining for k in self.pts[j]}
        subs = self.state.subscriptions
        running = []
        for i, (_, tf) in self.state.active.items():
            foot = tuple(sorted(
                (k if (k in needed or len(subs[k]) > 1) else -1, self.state.assignment[k], subs[k][i])
                for k in self.pts[i]
            ))
            running.append((tf, foot))
        return (
            t,
            remaining,
            tuple(sorted(running)),
            tuple(sorted((k, g) for k, g in genes.items() if k in needed)),
        )

    def _gene_fragment(self, app, genes):
        frag = {}
        for k in self.pts[app.id]:
            frag[k] = self.state.assignment.get(k, genes.get(k))
        return frag if self.state.check_feasible(app, frag) else None

    def lower_bound(self, t: float, remaining: frozenset) -> float:
        """Processing is additive in every mode, so base-station area bounds the finish."""
        running = self.state.active.values()
        lb = max((tf for _, tf in running), default=-math.inf)
        if remaining:
            lb = max(lb, t + max(self.apps[j].duration for j in remaining))
            area = sum(self.area[j] for j in remaining)
            area += sum(self.area[i] * (tf - t) / self.apps[i].duration for i, (_, tf) in self.state.active.items())
            lb = max(lb, t + area / self.capacity)
            if self.integral:
                lb = math.ceil(lb - 1e-9)
        return lb

    def value(self, t: float, remaining: frozenset, genes: dict, bound: float = math.inf) -> float:
        """Latest finish among running and future applications (-inf if none).

        Exact when below ``bound``; otherwise some lower bound that is >= ``bound``.
        """
        if not remaining:
            return max((tf for _, tf in self.state.active.values()), default=-math.inf)
        key = self._key(t, remaining, genes)
        hit = self.memo.get(key)
        if hit is not None and (hit[1] or hit[0] >= bound):
            return hit[0]
        lb = self.lower_bound(t, remaining)
        if lb >= bound:
            self.memo[key] = (lb, False)
            return lb
        self.nodes += 1
        best = math.inf
        seen_sigs = set()
        needed = {k for i in remaining for k in self.pts[i]}
        # long applications first finds good incumbents early
        for j in sorted(remaining, key=lambda i: (-self.apps[i].duration, i)):
            sig = self.signature[j]
            if sig in seen_sigs:
                continue
            seen_sigs.add(sig)
            app = self.apps[j]
            rest = remaining - {j}
            undecided = [k for k in self.pts[j] if k not in genes]
            for combo in list(self._gene_combos(undecided, dict(genes), needed)):
                new_genes = {**genes, **combo}
                released = []
                tt = t
                while True:
                    frag = self._gene_fragment(app, new_genes)
                    if frag is None and not self.state.active:
                        frag = self.state.worst_fit_assign(app)
                    if frag is not None:
                        break
                    tt = min(tf for _, tf in self.state.active.values())
                    due = sorted((tf, i, t0i) for i, (t0i, tf) in self.state.active.items() if tf <= tt)
                    for _, i, t0i in due:
                        fr = {k: self.state.assignment[k] for k in self.pts[i]}
                        released.append((i, t0i, fr))
                        self.state.release(i, now=tt)
                self.state.admit(app, frag, now=tt)
                v = self.value(tt, rest, new_genes, min(bound, best))
                self.state.release(app.id)
                for i, t0i, fr in reversed(released):
                    self.state.admit(self.apps[i], fr, now=t0i, check=False)
                best = min(best, v)
                if best <= lb:
                    break
            if best <= lb:
                break
        self.memo[key] = (best, best < bound)
        return best


def brute_force_optimal(topology: Topology, workload: Sequence[Application], mode=SharingMode.SHARED) -> float:
    """Optimal makespan over all admission orders and per-point genes.

    Requires simultaneous arrivals (otherwise falls back to
    :func:`exhaustive_optimal`). Applications that cannot run even on an idle
    network are dropped, as the simulator does.
    """
    mode = SharingMode.parse(mode)
    apps = sorted(workload, key=lambda a: a.id)
    _guard(topology, apps, MAX_APPS)
    if not apps:
        return 0.0
    if len({a.arrival_time for a in apps}) > 1:
        return exhaustive_optimal(topology, apps, mode)
    live = [a for a in apps if servable_alone(topology, a, mode)]
    if not live:
        return 0.0
    search = _Search(topology, live, mode)
    return search.value(live[0].arrival_time, frozenset(a.id for a in live), {})


# -- multiway number partitioning --------------------------------------------

@dataclass(frozen=True)
class MnpInstance:
    numbers: tuple[int, ...]
    k: int

    def __post_init__(self):
        if len(self.numbers) < 1 or self.k < 1:
            raise ValueError("need at least one number and one part")
        if any(int(a) != a or a <= 0 for a in self.numbers):
            raise ValueError("numbers must be positive integers")


def mnp_optimal(mnp: MnpInstance) -> int:
    """Smallest achievable largest part sum, over every split into ``k`` parts."""
    nums = sorted(mnp.numbers, reverse=True)
    if len(nums) > MAX_MNP:
        raise GuardError(f"{len(nums)} numbers exceed the enumeration limit of {MAX_MNP}")
    k = mnp.k
    sums = [0] * k
    best = [sum(nums)]

    # parts are unlabeled: a number may open at most one new empty part
    def place(i: int, used: int) -> None:
        if i == len(nums):
            best[0] = min(best[0], max(sums))
            return
        for p in range(min(used + 1, k)):
            sums[p] += nums[i]
            place(i + 1, max(used, p + 1))
            sums[p] -= nums[i]

    place(0, 0)
    return best[0]


def mnp_to_instance(mnp: MnpInstance) -> tuple[Topology, list[Application]]:
    """Scheduling instance whose optimal makespan equals the partition optimum.

    One unit-rate application per number (duration = the number), each on its
    own monitoring point; ``k`` sensor/base pairs with unit capacities. Every
    sensor covers every point and reaches only its own base.
    """
    n, k = len(mnp.numbers), mnp.k
    spread = max(n, 2 * k) + 10
    points = tuple(MonitoringPoint(j, j, 100, 0) for j in range(n))
    sensors = tuple(SensorNode(i, 10 * i, 0, sensing_range=10.0 * spread + 200, comm_range=1.5, sensing_capacity=1.0)
                    for i in range(k))
    bases = tuple(BaseStation(i, 10 * i, 1, processing_capacity=1.0) for i in range(k))
    topo = Topology(
        width=10 * spread, height=101, points=points, sensors=sensors, bases=bases,
        alpha=1.0, beta=1.0, link_bandwidth=1.0,
    )
    apps = [
        Application(j, (Request(j, 1.0),), float(a), batch=0, arrival_time=0.0, deadline=math.inf)
        for j, a in enumerate(mnp.numbers)
    ]
    return topo, apps


# -- random tiny instances -----------------------------------------------------

def tiny_instance(
    rng: np.random.Generator,
    max_apps: int = 6,
    max_sensors: int = 3,
    max_bases: int = 2,
    max_points_per_app: int = 1,
):
    """Random small instance with integer durations, all arrivals at 0, at most 4 pairs per point."""
    while True:
        n_sensors = int(rng.integers(1, max_sensors + 1))
        n_bases = int(rng.integers(1, max_bases + 1))
        n_points = int(rng.integers(1, 4))
        params = TopologyParams(
            width=60, height=60, n_points=n_points, n_sensors=n_sensors, n_bases=n_bases,
            comm_range=(30.0, 60.0), sensing_range=(25.0, 50.0),
            sensing_capacity=100.0, link_bandwidth=100.0, processing_capacity=120.0,
        )
        try:
            topo = generate_topology(params, int(rng.integers(2**31)))
        except ValueError:
            continue
        if all(1 <= len(topo.pairs_for(k)) <= MAX_CHOICES for k in range(topo.n_points)):
            break
    n_apps = int(rng.integers(2, max_apps + 1))
    apps = []
    for j in range(n_apps):
        m = int(rng.integers(1, min(max_points_per_app, topo.n_points) + 1))
        reqs = []
        for k in sorted(rng.choice(topo.n_points, size=m, replace=False).tolist()):
            lo, hi = RATE_INTERVALS[topo.points[k].data_type]
            reqs.append(Request(k, round(float(rng.uniform(lo, hi)), 3)))
        apps.append(Application(j, tuple(reqs), float(rng.integers(1, 21))))
    return topo, apps
