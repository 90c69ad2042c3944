"""Admission orders for the greedy policies and the FCFS/SJF baselines.

Every policy is a static key per application, so sorting the whole workload
once gives the same result as re-sorting the waiting queue whenever a batch
arrives: the simulator always picks the lowest-ranked *arrived* application.
All policies place points by worst fit.
"""
from __future__ import annotations

import enum
from typing import Sequence

from .resources import SharingMode
from .simulator import RunMetrics, Schedule, run
from .topology import Topology
from .workload import Application


class OrderingPolicy(str, enum.Enum):
    LMPF = "lmpf"  # fewest monitoring points first
    LMSF = "lmsf"  # smallest maximum rate first
    LTSF = "ltsf"  # smallest total rate first
    FCFS = "fcfs"
    SJF = "sjf"

    @classmethod
    def parse(cls, value: "str | OrderingPolicy") -> "OrderingPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {value!r}; expected one of {names}") from None


_KEYS = {
    OrderingPolicy.LMPF: lambda a: len(a.requests),
    OrderingPolicy.LMSF: lambda a: max(a.rates),
    OrderingPolicy.LTSF: lambda a: sum(a.rates),
    OrderingPolicy.SJF: lambda a: a.duration,
}


def order(policy: OrderingPolicy | str, apps: Sequence[Application]) -> list[int]:
    """Application ids in admission order; ties go to the lower id."""
    policy = OrderingPolicy.parse(policy)
    if policy is OrderingPolicy.FCFS:
        return _arrival_queue(apps)
    key = _KEYS[policy]
    return [a.id for a in sorted(apps, key=lambda a: (key(a), a.id))]


def _arrival_queue(apps: Sequence[Application]) -> list[int]:
    # Workloads are generated in id order, so the queue usually needs no
    # reordering at all; only fall back to a sort when it does.
    ids = [a.id for a in apps]
    keys = [(a.arrival_time, a.id) for a in apps]
    if all(keys[i] <= keys[i + 1] for i in range(len(keys) - 1)):
        return ids
    return [a.id for a in sorted(apps, key=lambda a: (a.arrival_time, a.id))]


def schedule(
    topology: Topology,
    workload: Sequence[Application],
    policy: OrderingPolicy | str,
    mode: SharingMode | str = SharingMode.SHARED,
    trace: bool = False,
) -> RunMetrics:
    return run(topology, workload, Schedule(tuple(order(policy, workload))), mode, trace=trace)
