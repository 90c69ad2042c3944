"""Time-varying resource ledger for sensing, link and processing load.

Loads are tracked in integer rate *units* (``RATE_SCALE`` units per rate unit)
so that admitting and then releasing an application restores the ledger
bit-for-bit. Capacities stay floating point and every comparison has the form
``coef * load_units <= capacity * RATE_SCALE``; the compiled engine uses the
same expressions so both agree at the boundary.
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field

from .topology import Topology
from .workload import Application

RATE_SCALE = 1000


def to_units(rate: float) -> int:
    return int(round(rate * RATE_SCALE))


class SharingMode(str, enum.Enum):
    SHARED = "shared"
    UNSHARED = "unshared"

    @classmethod
    def parse(cls, value: "str | SharingMode") -> "SharingMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown sharing mode {value!r}; expected shared|unshared") from None


class StructuralError(ValueError):
    """A proposed assignment breaks coverage, reach or stickiness."""


class InfeasibleError(RuntimeError):
    pass


def shared_demand(rates) -> float:
    """Multiplexed sensing: one stream at the highest requested rate."""
    return max(rates, default=0)


def unshared_demand(rates) -> float:
    return sum(rates)


def demand(mode: SharingMode, rates):
    return shared_demand(rates) if mode is SharingMode.SHARED else unshared_demand(rates)


def sensor_fits(topology: Topology, sensor: int, load: int) -> bool:
    return load <= topology.sensors[sensor].sensing_capacity * RATE_SCALE


def link_fits(topology: Topology, load: int) -> bool:
    return topology.alpha * load <= topology.link_bandwidth * RATE_SCALE


def base_fits(topology: Topology, base: int, load: int) -> bool:
    return topology.beta * load <= topology.bases[base].processing_capacity * RATE_SCALE


def sensor_residual(topology: Topology, sensor: int, load: int) -> float:
    return topology.sensors[sensor].sensing_capacity * RATE_SCALE - load


def base_residual(topology: Topology, base: int, load: int) -> float:
    return topology.bases[base].processing_capacity * RATE_SCALE - topology.beta * load


@dataclass
class Loads:
    sensor: dict[int, int] = field(default_factory=lambda: defaultdict(int))
    link: dict[tuple[int, int], int] = field(default_factory=lambda: defaultdict(int))
    base: dict[int, int] = field(default_factory=lambda: defaultdict(int))

    def nonzero(self) -> dict:
        return {
            "sensor": {k: v for k, v in sorted(self.sensor.items()) if v},
            "link": {k: v for k, v in sorted(self.link.items()) if v},
            "base": {k: v for k, v in sorted(self.base.items()) if v},
        }


def compute_loads(
    mode: SharingMode,
    subscriptions: dict[int, dict[int, int]],
    assignment: dict[int, tuple[int, int]],
) -> Loads:
    """Loads recomputed from scratch out of subscriptions and assignment."""
    loads = Loads()
    for k, subs in subscriptions.items():
        if not subs:
            continue
        s, b = assignment[k]
        d = demand(mode, subs.values())
        loads.sensor[s] += d
        loads.link[(s, b)] += d
        loads.base[b] += sum(subs.values())
    return loads


def load_violations(topology: Topology, loads: Loads) -> list[str]:
    out = []
    for s, v in sorted(loads.sensor.items()):
        if not sensor_fits(topology, s, v):
            out.append(f"sensor {s}: load {v / RATE_SCALE} > {topology.sensors[s].sensing_capacity}")
    for (s, b), v in sorted(loads.link.items()):
        if not link_fits(topology, v):
            out.append(f"link {s}->{b}: {topology.alpha}*{v / RATE_SCALE} > {topology.link_bandwidth}")
    for b, v in sorted(loads.base.items()):
        if not base_fits(topology, b, v):
            out.append(f"base {b}: {topology.beta}*{v / RATE_SCALE} > {topology.bases[b].processing_capacity}")
    return out


class NetworkState:
    """Ledger of which applications run, which points they read and where."""

    def __init__(self, topology: Topology, mode: SharingMode | str = SharingMode.SHARED, now: float = 0.0):
        self.topology = topology
        self.mode = SharingMode.parse(mode)
        self.now = now
        self.active: dict[int, tuple[float, float]] = {}
        self.apps: dict[int, Application] = {}
        self.subscriptions: dict[int, dict[int, int]] = {}
        self.assignment: dict[int, tuple[int, int]] = {}
        self.loads = Loads()

    # -- queries ---------------------------------------------------------
    def point_demand(self, k: int) -> int:
        return demand(self.mode, self.subscriptions.get(k, {}).values())

    def point_usage(self, k: int) -> int:
        return sum(self.subscriptions.get(k, {}).values())

    def is_active(self, app_id: int, t: float) -> bool:
        """Deployment indicator: true for t0 < t <= tf."""
        if app_id not in self.active:
            return False
        t0, tf = self.active[app_id]
        return t0 < t <= tf

    def _validate(self, app: Application, proposed: dict[int, tuple[int, int]]) -> None:
        if set(proposed) != set(app.point_ids):
            raise StructuralError(
                f"assignment for app {app.id} covers {sorted(proposed)}, expected {sorted(app.point_ids)}"
            )
        topo = self.topology
        for k, (s, b) in proposed.items():
            if s not in topo.candidates[k]:
                raise StructuralError(f"sensor {s} cannot serve point {k}")
            if b not in topo.reach[s]:
                raise StructuralError(f"base {b} is out of range of sensor {s}")
            if k in self.assignment and self.assignment[k] != (s, b):
                raise StructuralError(
                    f"point {k} is already served by {self.assignment[k]}, not {(s, b)}"
                )

    def _deltas(self, app: Application, proposed: dict[int, tuple[int, int]]) -> Loads:
        deltas = Loads()
        for req in app.requests:
            k = req.point_id
            s, b = proposed[k]
            subs = list(self.subscriptions.get(k, {}).values())
            u = to_units(req.rate)
            inc = demand(self.mode, subs + [u]) - demand(self.mode, subs)
            deltas.sensor[s] += inc
            deltas.link[(s, b)] += inc
            deltas.base[b] += u
        return deltas

    def check_feasible(self, app: Application, proposed: dict[int, tuple[int, int]]) -> bool:
        self._validate(app, proposed)
        d = self._deltas(app, proposed)
        topo = self.topology
        return (
            all(sensor_fits(topo, s, self.loads.sensor[s] + v) for s, v in d.sensor.items())
            and all(link_fits(topo, self.loads.link[l] + v) for l, v in d.link.items())
            and all(base_fits(topo, b, self.loads.base[b] + v) for b, v in d.base.items())
        )

    def worst_fit_assign(self, app: Application) -> dict[int, tuple[int, int]] | None:
        """Least-loaded placement for every point of ``app``, or None.

        Points are placed in ascending id order. A point that is already being
        sensed keeps its pair. Otherwise the candidate sensor with the most
        residual sensing capacity is tried first, and under it the reachable
        base with the most residual processing capacity whose link still fits.
        Ties go to the lower id.
        """
        topo = self.topology
        tent = Loads()
        frag: dict[int, tuple[int, int]] = {}
        for req in sorted(app.requests, key=lambda r: r.point_id):
            k = req.point_id
            u = to_units(req.rate)
            if k in self.assignment:
                s, b = self.assignment[k]
                subs = list(self.subscriptions[k].values())
                inc = demand(self.mode, subs + [u]) - demand(self.mode, subs)
                if not (
                    sensor_fits(topo, s, self.loads.sensor[s] + tent.sensor[s] + inc)
                    and link_fits(topo, self.loads.link[(s, b)] + tent.link[(s, b)] + inc)
                    and base_fits(topo, b, self.loads.base[b] + tent.base[b] + u)
                ):
                    return None
            else:
                inc = u
                pair = None
                sensors = sorted(
                    topo.candidates[k],
                    key=lambda s: (-sensor_residual(topo, s, self.loads.sensor[s] + tent.sensor[s]), s),
                )
                for s in sensors:
                    if not sensor_fits(topo, s, self.loads.sensor[s] + tent.sensor[s] + inc):
                        continue
                    bases = sorted(
                        topo.reach[s],
                        key=lambda b: (-base_residual(topo, b, self.loads.base[b] + tent.base[b]), b),
                    )
                    for b in bases:
                        if link_fits(topo, self.loads.link[(s, b)] + tent.link[(s, b)] + inc) and base_fits(
                            topo, b, self.loads.base[b] + tent.base[b] + u
                        ):
                            pair = (s, b)
                            break
                    if pair is not None:
                        break
                if pair is None:
                    return None
                s, b = pair
            frag[k] = (s, b)
            tent.sensor[s] += inc
            tent.link[(s, b)] += inc
            tent.base[b] += u
        return frag

    # -- mutation --------------------------------------------------------
    def admit(
        self,
        app: Application,
        proposed: dict[int, tuple[int, int]],
        now: float | None = None,
        check: bool = True,
    ) -> None:
        """Deploy ``app``. ``check=False`` skips the capacity test (for undoing a release)."""
        if now is not None:
            self.now = now
        if app.id in self.active:
            raise InfeasibleError(f"application {app.id} is already active")
        if check and not self.check_feasible(app, proposed):
            raise InfeasibleError(f"application {app.id} does not fit at t={self.now}")
        d = self._deltas(app, proposed)
        for s, v in d.sensor.items():
            self.loads.sensor[s] += v
        for l, v in d.link.items():
            self.loads.link[l] += v
        for b, v in d.base.items():
            self.loads.base[b] += v
        for req in app.requests:
            k = req.point_id
            self.subscriptions.setdefault(k, {})[app.id] = to_units(req.rate)
            self.assignment.setdefault(k, proposed[k])
        self.active[app.id] = (self.now, self.now + app.duration)
        self.apps[app.id] = app

    def release(self, app_id: int, now: float | None = None) -> Application:
        if now is not None:
            self.now = now
        if app_id not in self.active:
            raise InfeasibleError(f"application {app_id} is not active")
        app = self.apps.pop(app_id)
        del self.active[app_id]
        for req in app.requests:
            k = req.point_id
            s, b = self.assignment[k]
            before = self.point_demand(k)
            u = self.subscriptions[k].pop(app_id)
            after = self.point_demand(k)
            self.loads.sensor[s] += after - before
            self.loads.link[(s, b)] += after - before
            self.loads.base[b] -= u
            if not self.subscriptions[k]:
                del self.subscriptions[k]
                del self.assignment[k]
        return app

    # -- audit -----------------------------------------------------------
    def recomputed_loads(self) -> Loads:
        return compute_loads(self.mode, self.subscriptions, self.assignment)

    def ledger_consistent(self) -> bool:
        return self.recomputed_loads().nonzero() == self.loads.nonzero()

    def violations(self) -> list[str]:
        return load_violations(self.topology, self.recomputed_loads())

    def snapshot(self) -> dict:
        """JSON-ready view of the ledger, rates in rate units."""
        loads = self.loads.nonzero()
        return {
            "time": self.now,
            "mode": self.mode.value,
            "active": {str(j): list(v) for j, v in sorted(self.active.items())},
            "assignment": {str(k): list(v) for k, v in sorted(self.assignment.items())},
            "subscriptions": {
                str(k): {str(j): u / RATE_SCALE for j, u in sorted(subs.items())}
                for k, subs in sorted(self.subscriptions.items())
            },
            "loads": {
                "sensor": {str(s): v / RATE_SCALE for s, v in loads["sensor"].items()},
                "link": {f"{s}-{b}": v / RATE_SCALE for (s, b), v in loads["link"].items()},
                "base": {str(b): v / RATE_SCALE for b, v in loads["base"].items()},
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)


def check_feasible(state: NetworkState, app: Application, proposed: dict[int, tuple[int, int]]) -> bool:
    return state.check_feasible(app, proposed)


def worst_fit_assign(state: NetworkState, app: Application) -> dict[int, tuple[int, int]] | None:
    return state.worst_fit_assign(app)


def servable_alone(topology: Topology, app: Application, mode: SharingMode | str) -> bool:
    """Whether ``app`` fits on an otherwise idle network."""
    return NetworkState(topology, mode).worst_fit_assign(app) is not None
