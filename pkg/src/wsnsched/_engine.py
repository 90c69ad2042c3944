"""Compiled admission/release event loop.

This is the hot path behind :func:`wsnsched.simulator.run`; a GA fitness
evaluation is one call. It mirrors ``resources.NetworkState`` operation for
operation (same integer units, same float comparisons, same tie-breaks) and
the test-suite cross-checks the two on random instances.
"""
from __future__ import annotations

import heapq
from typing import NamedTuple

import numba as nb
import numpy as np

from .resources import RATE_SCALE, to_units

EV_ARRIVE, EV_ADMIT, EV_RELEASE, EV_BLOCK, EV_REJECT = 0, 1, 2, 3, 4
EVENT_NAMES = ("arrive", "admit", "release", "block", "reject")


class Instance(NamedTuple):
    # topology
    cand_ptr: np.ndarray
    cand_idx: np.ndarray
    reach_ptr: np.ndarray
    reach_idx: np.ndarray
    link_id: np.ndarray  # (n_sensors, n_bases), -1 where no link
    sensor_cap: np.ndarray
    link_cap: float
    base_cap: np.ndarray
    alpha: float
    beta: float
    # workload
    app_ptr: np.ndarray
    app_pts: np.ndarray
    app_units: np.ndarray
    duration: np.ndarray
    arrival: np.ndarray
    pt_ref_ptr: np.ndarray
    pt_ref_idx: np.ndarray
    app_ids: np.ndarray  # engine index -> Application.id


def _csr(rows):
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        ptr[i + 1] = ptr[i] + len(r)
    idx = np.fromiter((v for r in rows for v in r), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


def build_instance(topology, apps) -> Instance:
    cand_ptr, cand_idx = _csr([topology.candidates[k] for k in range(topology.n_points)])
    reach_ptr, reach_idx = _csr([topology.reach[s] for s in range(topology.n_sensors)])
    link_id = -np.ones((max(topology.n_sensors, 1), max(topology.n_bases, 1)), dtype=np.int64)
    for i, link in enumerate(topology.links):
        link_id[link.sensor_id, link.base_id] = i
    rows = [sorted(a.requests, key=lambda r: r.point_id) for a in apps]
    app_ptr, app_pts = _csr([[r.point_id for r in row] for row in rows])
    app_units = np.fromiter(
        (to_units(r.rate) for row in rows for r in row), dtype=np.int64, count=len(app_pts)
    )
    refs = [[] for _ in range(topology.n_points)]
    for f, k in enumerate(app_pts):
        refs[k].append(f)
    pt_ref_ptr, pt_ref_idx = _csr(refs)
    return Instance(
        cand_ptr,
        cand_idx,
        reach_ptr,
        reach_idx,
        link_id,
        np.array([s.sensing_capacity * RATE_SCALE for s in topology.sensors], dtype=np.float64),
        float(topology.link_bandwidth * RATE_SCALE),
        np.array([b.processing_capacity * RATE_SCALE for b in topology.bases], dtype=np.float64),
        float(topology.alpha),
        float(topology.beta),
        app_ptr,
        app_pts,
        app_units,
        np.array([a.duration for a in apps], dtype=np.float64),
        np.array([a.arrival_time for a in apps], dtype=np.float64),
        pt_ref_ptr,
        pt_ref_idx,
        np.array([a.id for a in apps], dtype=np.int64),
    )


@nb.njit(cache=True)
def _try_place(
    j, use_genes, gene_s, gene_b, shared,
    cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
    sensor_cap, link_cap, base_cap, alpha, beta,
    app_ptr, app_pts, app_units,
    point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
    sensor_load, link_load, base_load,
    undo_prev_max, tried, btried,
):
    """Place every request of app ``j`` or leave the state untouched."""
    lo = app_ptr[j]
    hi = app_ptr[j + 1]
    placed = lo
    ok = True
    for f in range(lo, hi):
        k = app_pts[f]
        u = app_units[f]
        s = -1
        b = -1
        if point_s[k] >= 0:
            s = point_s[k]
            b = point_b[k]
            if shared:
                inc = max(point_max[k], u) - point_max[k]
            else:
                inc = u
            l = link_id[s, b]
            if not (
                sensor_load[s] + inc <= sensor_cap[s]
                and alpha * (link_load[l] + inc) <= link_cap
                and beta * (base_load[b] + u) <= base_cap[b]
            ):
                ok = False
        else:
            inc = u
            if use_genes:
                s = gene_s[k]
                b = gene_b[k]
                l = -1 if (s < 0 or b < 0) else link_id[s, b]
                if l < 0:
                    ok = False
                else:
                    if not (
                        sensor_load[s] + inc <= sensor_cap[s]
                        and alpha * (link_load[l] + inc) <= link_cap
                        and beta * (base_load[b] + u) <= base_cap[b]
                    ):
                        ok = False
            else:
                c0 = cand_ptr[k]
                c1 = cand_ptr[k + 1]
                nc = c1 - c0
                tried[:nc] = False
                found = False
                for _ in range(nc):
                    best = -1
                    best_res = 0.0
                    for ci in range(nc):
                        if tried[ci]:
                            continue
                        cs = cand_idx[c0 + ci]
                        res = sensor_cap[cs] - sensor_load[cs]
                        if best < 0 or res > best_res:
                            best = ci
                            best_res = res
                    tried[best] = True
                    cs = cand_idx[c0 + best]
                    if not (sensor_load[cs] + inc <= sensor_cap[cs]):
                        continue
                    r0 = reach_ptr[cs]
                    r1 = reach_ptr[cs + 1]
                    nr = r1 - r0
                    btried[:nr] = False
                    for _ in range(nr):
                        bb = -1
                        bres = 0.0
                        for ri in range(nr):
                            if btried[ri]:
                                continue
                            cb = reach_idx[r0 + ri]
                            res = base_cap[cb] - beta * base_load[cb]
                            if bb < 0 or res > bres:
                                bb = ri
                                bres = res
                        btried[bb] = True
                        cb = reach_idx[r0 + bb]
                        l = link_id[cs, cb]
                        if alpha * (link_load[l] + inc) <= link_cap and beta * (base_load[cb] + u) <= base_cap[cb]:
                            s = cs
                            b = cb
                            found = True
                            break
                    if found:
                        break
                if not found:
                    ok = False
        if not ok:
            break
        l = link_id[s, b]
        sensor_load[s] += inc
        link_load[l] += inc
        base_load[b] += u
        undo_prev_max[f - lo] = point_max[k]
        if u > point_max[k]:
            point_max[k] = u
        if point_cnt[k] == 0:
            point_s[k] = s
            point_b[k] = b
        point_cnt[k] += 1
        flat_active[f] = True
        flat_s[f] = s
        flat_b[f] = b
        placed = f + 1
    if ok:
        return True
    # roll back in reverse order
    for f in range(placed - 1, lo - 1, -1):
        k = app_pts[f]
        u = app_units[f]
        s = flat_s[f]
        b = flat_b[f]
        l = link_id[s, b]
        prev = undo_prev_max[f - lo]
        if shared:
            inc = point_max[k] - prev
        else:
            inc = u
        sensor_load[s] -= inc
        link_load[l] -= inc
        base_load[b] -= u
        point_max[k] = prev
        point_cnt[k] -= 1
        if point_cnt[k] == 0:
            point_s[k] = -1
            point_b[k] = -1
        flat_active[f] = False
        flat_s[f] = -1
        flat_b[f] = -1
    return False


@nb.njit(cache=True)
def _release(
    j, shared, link_id, app_ptr, app_pts, app_units, pt_ref_ptr, pt_ref_idx,
    point_s, point_b, point_cnt, point_max, flat_active,
    sensor_load, link_load, base_load,
):
    for f in range(app_ptr[j], app_ptr[j + 1]):
        k = app_pts[f]
        u = app_units[f]
        s = point_s[k]
        b = point_b[k]
        l = link_id[s, b]
        flat_active[f] = False
        point_cnt[k] -= 1
        old = point_max[k]
        new = 0
        for q in range(pt_ref_ptr[k], pt_ref_ptr[k + 1]):
            g = pt_ref_idx[q]
            if flat_active[g] and app_units[g] > new:
                new = app_units[g]
        point_max[k] = new
        dec = (old - new) if shared else u
        sensor_load[s] -= dec
        link_load[l] -= dec
        base_load[b] -= u
        if point_cnt[k] == 0:
            point_s[k] = -1
            point_b[k] = -1


@nb.njit(cache=True)
def _alloc(cand_ptr, reach_ptr, link_id, sensor_cap, base_cap, app_ptr, app_pts):
    n_points = cand_ptr.shape[0] - 1
    n_flat = app_pts.shape[0]
    max_req = 1
    for j in range(app_ptr.shape[0] - 1):
        max_req = max(max_req, app_ptr[j + 1] - app_ptr[j])
    max_cand = 1
    for k in range(n_points):
        max_cand = max(max_cand, cand_ptr[k + 1] - cand_ptr[k])
    max_reach = 1
    for i in range(reach_ptr.shape[0] - 1):
        max_reach = max(max_reach, reach_ptr[i + 1] - reach_ptr[i])
    return (
        -np.ones(n_points, dtype=np.int64),
        -np.ones(n_points, dtype=np.int64),
        np.zeros(n_points, dtype=np.int64),
        np.zeros(n_points, dtype=np.int64),
        np.zeros(n_flat, dtype=np.bool_),
        -np.ones(n_flat, dtype=np.int64),
        -np.ones(n_flat, dtype=np.int64),
        np.zeros(sensor_cap.shape[0], dtype=np.int64),
        np.zeros(max(1, link_id.size), dtype=np.int64),
        np.zeros(base_cap.shape[0], dtype=np.int64),
        np.zeros(max_req, dtype=np.int64),
        np.zeros(max_cand, dtype=np.bool_),
        np.zeros(max_reach, dtype=np.bool_),
    )


@nb.njit(cache=True)
def idle_rejections(
    cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
    sensor_cap, link_cap, base_cap, alpha, beta,
    app_ptr, app_pts, app_units, pt_ref_ptr, pt_ref_idx, shared,
):
    """Mask of applications that worst fit cannot place on an idle network."""
    n = app_ptr.shape[0] - 1
    (point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
     sensor_load, link_load, base_load, undo, tried, btried) = _alloc(
        cand_ptr, reach_ptr, link_id, sensor_cap, base_cap, app_ptr, app_pts)
    gene_none = np.empty(0, dtype=np.int64)
    rejected = np.zeros(n, dtype=np.bool_)
    for j in range(n):
        if _try_place(
            j, False, gene_none, gene_none, shared,
            cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
            sensor_cap, link_cap, base_cap, alpha, beta,
            app_ptr, app_pts, app_units,
            point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
            sensor_load, link_load, base_load, undo, tried, btried,
        ):
            _release(
                j, shared, link_id, app_ptr, app_pts, app_units, pt_ref_ptr, pt_ref_idx,
                point_s, point_b, point_cnt, point_max, flat_active,
                sensor_load, link_load, base_load,
            )
        else:
            rejected[j] = True
    return rejected


@nb.njit(cache=True)
def simulate(
    cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
    sensor_cap, link_cap, base_cap, alpha, beta,
    app_ptr, app_pts, app_units, duration, arrival, pt_ref_ptr, pt_ref_idx,
    rank, use_genes, gene_s, gene_b, shared, record, rejected_in,
):
    n = duration.shape[0]
    (point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
     sensor_load, link_load, base_load, undo, tried, btried) = _alloc(
        cand_ptr, reach_ptr, link_id, sensor_cap, base_cap, app_ptr, app_pts)

    t0 = np.full(n, np.nan)
    rejected = rejected_in.copy()

    cap_ev = 6 * n + 8 if record else 1
    ev_time = np.zeros(cap_ev)
    ev_kind = np.zeros(cap_ev, dtype=np.int64)
    ev_app = np.zeros(cap_ev, dtype=np.int64)
    ne = 0

    arr_order = np.argsort(arrival, kind="mergesort")
    waiting = [(np.int64(0), np.int64(0))]
    waiting.pop()
    running = [(0.0, np.int64(0))]
    running.pop()
    t = 0.0
    ai = 0
    while True:
        while len(running) > 0 and running[0][0] <= t:
            tf, j = heapq.heappop(running)
            _release(
                j, shared, link_id, app_ptr, app_pts, app_units, pt_ref_ptr, pt_ref_idx,
                point_s, point_b, point_cnt, point_max, flat_active,
                sensor_load, link_load, base_load,
            )
            if record:
                ev_time[ne] = tf
                ev_kind[ne] = 2
                ev_app[ne] = j
                ne += 1
        while ai < n and arrival[arr_order[ai]] <= t:
            j = arr_order[ai]
            ai += 1
            if record:
                ev_time[ne] = arrival[j]
                ev_kind[ne] = 0
                ev_app[ne] = j
                ne += 1
            if rejected[j]:
                if record:
                    ev_time[ne] = arrival[j]
                    ev_kind[ne] = 4
                    ev_app[ne] = j
                    ne += 1
            else:
                heapq.heappush(waiting, (rank[j], j))
        while len(waiting) > 0:
            j = waiting[0][1]
            ok = _try_place(
                j, use_genes, gene_s, gene_b, shared,
                cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
                sensor_cap, link_cap, base_cap, alpha, beta,
                app_ptr, app_pts, app_units,
                point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
                sensor_load, link_load, base_load, undo, tried, btried,
            )
            if not ok and use_genes and len(running) == 0:
                # genes cannot host this app even alone; fall back to worst fit
                ok = _try_place(
                    j, False, gene_s, gene_b, shared,
                    cand_ptr, cand_idx, reach_ptr, reach_idx, link_id,
                    sensor_cap, link_cap, base_cap, alpha, beta,
                    app_ptr, app_pts, app_units,
                    point_s, point_b, point_cnt, point_max, flat_active, flat_s, flat_b,
                    sensor_load, link_load, base_load, undo, tried, btried,
                )
            if ok:
                heapq.heappop(waiting)
                t0[j] = t
                heapq.heappush(running, (t + duration[j], j))
                if record:
                    ev_time[ne] = t
                    ev_kind[ne] = 1
                    ev_app[ne] = j
                    ne += 1
            elif len(running) == 0:
                # unreachable after the idle-network pre-check; kept as a guard
                heapq.heappop(waiting)
                rejected[j] = True
                if record:
                    ev_time[ne] = t
                    ev_kind[ne] = 4
                    ev_app[ne] = j
                    ne += 1
            else:
                if record:
                    ev_time[ne] = t
                    ev_kind[ne] = 3
                    ev_app[ne] = j
                    ne += 1
                break
        nxt = np.inf
        if ai < n:
            nxt = arrival[arr_order[ai]]
        if len(running) > 0 and running[0][0] < nxt:
            nxt = running[0][0]
        if nxt == np.inf:
            break
        t = nxt
    return t0, rejected, flat_s, flat_b, ev_time[:ne], ev_kind[:ne], ev_app[:ne]


def rejections(inst: Instance, shared: bool) -> np.ndarray:
    return idle_rejections(
        inst.cand_ptr, inst.cand_idx, inst.reach_ptr, inst.reach_idx, inst.link_id,
        inst.sensor_cap, inst.link_cap, inst.base_cap, inst.alpha, inst.beta,
        inst.app_ptr, inst.app_pts, inst.app_units, inst.pt_ref_ptr, inst.pt_ref_idx, bool(shared),
    )


def run_instance(inst: Instance, rank, shared: bool, genes=None, record: bool = False, rejected=None):
    """Thin wrapper unpacking an :class:`Instance` for :func:`simulate`.

    ``rejected`` may carry a cached :func:`rejections` mask for this mode.
    """
    if rejected is None:
        rejected = rejections(inst, shared)
    if genes is None:
        gene_s = gene_b = np.empty(0, dtype=np.int64)
        use_genes = False
    else:
        gene_s, gene_b = genes
        use_genes = True
    return simulate(
        inst.cand_ptr, inst.cand_idx, inst.reach_ptr, inst.reach_idx, inst.link_id,
        inst.sensor_cap, inst.link_cap, inst.base_cap, inst.alpha, inst.beta,
        inst.app_ptr, inst.app_pts, inst.app_units, inst.duration, inst.arrival,
        inst.pt_ref_ptr, inst.pt_ref_idx,
        np.asarray(rank, dtype=np.int64), use_genes,
        np.asarray(gene_s, dtype=np.int64), np.asarray(gene_b, dtype=np.int64),
        bool(shared), bool(record), rejected,
    )
