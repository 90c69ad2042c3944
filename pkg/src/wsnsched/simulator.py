"""Event-driven admission of applications in a given order.

Applications are offered resources strictly in schedule order among those
that have arrived: if the head of the queue does not fit, nothing behind it
is admitted and time jumps to the next release or arrival. Releases at an
instant are applied before admissions at that instant.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _engine
from .resources import (
    NetworkState,
    SharingMode,
    compute_loads,
    load_violations,
    servable_alone,
    to_units,
)
from .topology import Topology
from .workload import Application


@dataclass(frozen=True)
class Schedule:
    """Admission order plus, optionally, fixed per-point (sensor, base) genes.

    Without genes, new points are placed by worst fit. With genes, a point that
    becomes active takes its gene pair; if the genes cannot host an application
    even on an idle network, that application falls back to worst fit.
    """

    admission_order: tuple[int, ...]
    sensor_genes: tuple[int, ...] | None = None
    bs_genes: tuple[int, ...] | None = None

    @property
    def uses_genes(self) -> bool:
        return self.sensor_genes is not None


@dataclass(frozen=True)
class AppRecord:
    app_id: int
    arrival: float
    t0: float
    tf: float
    waited: float
    turnaround: float
    met_deadline: bool


@dataclass
class RunMetrics:
    makespan: float
    avg_waiting: float
    avg_turnaround: float
    success_rate: float
    records: list[AppRecord]
    rejected: list[int]
    trace: list[dict] | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "makespan": self.makespan,
            "avg_waiting": self.avg_waiting,
            "avg_turnaround": self.avg_turnaround,
            "success_rate": self.success_rate,
            "admitted": len(self.records),
            "rejected": len(self.rejected),
        }


def metrics_from(apps: Sequence[Application], t0: dict[int, float], rejected: Sequence[int]) -> RunMetrics:
    records = []
    met = 0
    for a in apps:
        if a.id not in t0:
            continue
        start = t0[a.id]
        tf = start + a.duration
        ok = tf <= a.deadline
        met += ok
        records.append(AppRecord(a.id, a.arrival_time, start, tf, start - a.arrival_time, tf - a.arrival_time, ok))
    if records:
        makespan = max(r.tf for r in records)
        avg_w = math.fsum(r.waited for r in records) / len(records)
        avg_t = math.fsum(r.turnaround for r in records) / len(records)
    else:
        makespan = 0.0
        avg_w = avg_t = math.nan if apps else 0.0
    success = met / len(apps) if apps else 1.0
    return RunMetrics(makespan, avg_w, avg_t, success, records, sorted(rejected))


def _check_schedule(apps: Sequence[Application], schedule: Schedule) -> None:
    ids = sorted(a.id for a in apps)
    if sorted(schedule.admission_order) != ids:
        raise ValueError("admission_order must be a permutation of the workload's application ids")


def _genes_array(topology: Topology, schedule: Schedule, apps: Sequence[Application]):
    if not schedule.uses_genes:
        return None
    gs = np.asarray(schedule.sensor_genes, dtype=np.int64)
    gb = np.asarray(schedule.bs_genes, dtype=np.int64)
    if gs.shape != (topology.n_points,) or gb.shape != (topology.n_points,):
        raise ValueError("gene vectors must have one entry per monitoring point")
    for k in {k for a in apps for k in a.point_ids}:
        s, b = int(gs[k]), int(gb[k])
        if topology.candidates[k] and (s not in topology.candidates[k] or b not in topology.reach[s]):
            raise ValueError(f"genes {(s, b)} cannot serve point {k}")
    return gs, gb


def ranks_for(apps: Sequence[Application], order: Sequence[int]) -> np.ndarray:
    pos = {a: i for i, a in enumerate(order)}
    return np.array([pos[a.id] for a in apps], dtype=np.int64)


def run(
    topology: Topology,
    workload: Sequence[Application],
    schedule: Schedule,
    mode: SharingMode | str = SharingMode.SHARED,
    trace: bool = False,
    instance: _engine.Instance | None = None,
) -> RunMetrics:
    mode = SharingMode.parse(mode)
    apps = sorted(workload, key=lambda a: a.id)
    _check_schedule(apps, schedule)
    if not apps:
        m = metrics_from(apps, {}, [])
        m.trace = [] if trace else None
        return m
    inst = instance if instance is not None else _engine.build_instance(topology, apps)
    t0, rejected, flat_s, flat_b, ev_t, ev_k, ev_a = _engine.run_instance(
        inst, ranks_for(apps, schedule.admission_order), mode is SharingMode.SHARED,
        _genes_array(topology, schedule, apps), record=trace,
    )
    starts = {apps[j].id: float(t0[j]) for j in range(len(apps)) if not rejected[j]}
    m = metrics_from(apps, starts, [apps[j].id for j in np.flatnonzero(rejected)])
    if trace:
        m.trace = _decode_trace(apps, inst, flat_s, flat_b, ev_t, ev_k, ev_a)
    return m


def _decode_trace(apps, inst, flat_s, flat_b, ev_t, ev_k, ev_a) -> list[dict]:
    out = []
    for t, k, j in zip(ev_t.tolist(), ev_k.tolist(), ev_a.tolist()):
        rec = {"time": t, "event": _engine.EVENT_NAMES[k], "app": apps[j].id}
        if k == _engine.EV_ADMIT:
            lo, hi = inst.app_ptr[j], inst.app_ptr[j + 1]
            rec["assignment"] = {
                str(int(inst.app_pts[f])): [int(flat_s[f]), int(flat_b[f])] for f in range(lo, hi)
            }
        out.append(rec)
    return out


def run_reference(
    topology: Topology,
    workload: Sequence[Application],
    schedule: Schedule,
    mode: SharingMode | str = SharingMode.SHARED,
    trace: bool = False,
) -> RunMetrics:
    """Same contract as :func:`run`, written against :class:`NetworkState`.

    Slow; kept as the executable definition the compiled engine is tested against.
    """
    mode = SharingMode.parse(mode)
    apps = sorted(workload, key=lambda a: a.id)
    _check_schedule(apps, schedule)
    by_id = {a.id: a for a in apps}
    rank = {a: i for i, a in enumerate(schedule.admission_order)}
    genes = _genes_array(topology, schedule, apps)
    rejected = {a.id for a in apps if not servable_alone(topology, a, mode)}

    state = NetworkState(topology, mode)
    events: list[dict] = []
    starts: dict[int, float] = {}
    arrivals = sorted(apps, key=lambda a: (a.arrival_time, a.id))
    waiting: list[tuple[int, int]] = []
    running: list[tuple[float, int]] = []
    t, ai = 0.0, 0

    def gene_fragment(app):
        frag = {}
        for k in app.point_ids:
            if k in state.assignment:
                frag[k] = state.assignment[k]
            else:
                s, b = int(genes[0][k]), int(genes[1][k])
                if s < 0 or b < 0 or s not in topology.candidates[k] or b not in topology.reach[s]:
                    return None
                frag[k] = (s, b)
        return frag if state.check_feasible(app, frag) else None

    while True:
        while running and running[0][0] <= t:
            tf, j = heapq.heappop(running)
            state.release(j, now=tf)
            events.append({"time": tf, "event": "release", "app": j})
        while ai < len(arrivals) and arrivals[ai].arrival_time <= t:
            a = arrivals[ai]
            ai += 1
            events.append({"time": a.arrival_time, "event": "arrive", "app": a.id})
            if a.id in rejected:
                events.append({"time": a.arrival_time, "event": "reject", "app": a.id})
            else:
                heapq.heappush(waiting, (rank[a.id], a.id))
        while waiting:
            j = waiting[0][1]
            app = by_id[j]
            frag = gene_fragment(app) if genes is not None else state.worst_fit_assign(app)
            if frag is None and genes is not None and not running:
                frag = state.worst_fit_assign(app)
            if frag is not None:
                heapq.heappop(waiting)
                state.admit(app, frag, now=t)
                starts[j] = t
                heapq.heappush(running, (t + app.duration, j))
                events.append({
                    "time": t, "event": "admit", "app": j,
                    "assignment": {str(k): list(frag[k]) for k in sorted(frag)},
                })
            elif not running:
                heapq.heappop(waiting)
                rejected.add(j)
                events.append({"time": t, "event": "reject", "app": j})
            else:
                events.append({"time": t, "event": "block", "app": j})
                break
        nxt = math.inf
        if ai < len(arrivals):
            nxt = arrivals[ai].arrival_time
        if running and running[0][0] < nxt:
            nxt = running[0][0]
        if nxt == math.inf:
            break
        t = nxt
    m = metrics_from(apps, starts, sorted(rejected))
    if trace:
        m.trace = events
    return m


# -- trace I/O and audit ------------------------------------------------------

def write_trace(trace: list[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def audit_report(
    topology: Topology,
    workload: Sequence[Application],
    trace: list[dict],
    mode: SharingMode | str = SharingMode.SHARED,
) -> list[str]:
    """Replay ``trace`` and list every problem found.

    Loads are rebuilt from scratch after each instant's events. Within an
    instant, releases come first and admissions only add load, so the state at
    the end of the instant dominates every intermediate state.
    """
    mode = SharingMode.parse(mode)
    by_id = {a.id: a for a in workload}
    subs: dict[int, dict[int, int]] = {}
    assignment: dict[int, tuple[int, int]] = {}
    active: dict[int, float] = {}
    done: set[int] = set()
    problems: list[str] = []
    last_t = -math.inf
    last_admit = -math.inf

    def check(t):
        for v in load_violations(topology, compute_loads(mode, subs, assignment)):
            problems.append(f"t={t}: {v}")

    for i, ev in enumerate(trace):
        t = float(ev["time"])
        if t < last_t:
            problems.append(f"event {i}: time goes backwards ({t} < {last_t})")
        if t != last_t and i:
            check(last_t)
        last_t = max(last_t, t)
        kind = ev["event"]
        j = ev["app"]
        app = by_id.get(j)
        if app is None:
            problems.append(f"event {i}: unknown application {j}")
            continue
        if kind == "admit":
            if j in active or j in done:
                problems.append(f"event {i}: application {j} admitted twice")
                continue
            if t < app.arrival_time:
                problems.append(f"event {i}: application {j} admitted before arrival")
            if t < last_admit:
                problems.append(f"event {i}: admissions out of time order")
            last_admit = t
            frag = {int(k): tuple(v) for k, v in ev.get("assignment", {}).items()}
            if set(frag) != set(app.point_ids):
                problems.append(f"event {i}: assignment does not match points of {j}")
                continue
            for req in app.requests:
                k = req.point_id
                s, b = frag[k]
                if s not in topology.candidates.get(k, ()) or b not in topology.reach.get(s, ()):
                    problems.append(f"event {i}: pair {(s, b)} cannot serve point {k}")
                    continue
                if k in assignment and assignment[k] != (s, b):
                    problems.append(f"event {i}: point {k} moved while active")
                assignment.setdefault(k, (s, b))
                subs.setdefault(k, {})[j] = to_units(req.rate)
            active[j] = t
        elif kind == "release":
            if j not in active:
                problems.append(f"event {i}: release of inactive application {j}")
                continue
            if t != active[j] + app.duration:
                problems.append(f"event {i}: application {j} released at {t}, expected {active[j] + app.duration}")
            for k in app.point_ids:
                if k not in subs:
                    continue
                subs[k].pop(j, None)
                if not subs[k]:
                    del subs[k]
                    del assignment[k]
            del active[j]
            done.add(j)
        elif kind not in ("arrive", "block", "reject"):
            problems.append(f"event {i}: unknown event kind {kind!r}")
    if trace:
        check(last_t)
    return problems


def audit(topology, workload, trace, mode=SharingMode.SHARED) -> bool:
    return not audit_report(topology, workload, trace, mode)
