"""Seedable toolkit for scheduling applications on a shared wireless sensor network.

Modules, bottom up: ``topology`` and ``workload`` generate instances,
``resources`` keeps the capacity ledger, ``simulator`` admits applications in
a given order, ``greedy`` and ``gabas`` produce orders, ``oracle`` solves
small instances exactly and ``harness`` runs scenario sweeps.
"""
from .resources import SharingMode
from .simulator import RunMetrics, Schedule, audit, run
from .topology import Topology, TopologyParams, generate_topology
from .workload import Application, Request, WorkloadParams, generate_workload

__all__ = [
    "Application",
    "Request",
    "RunMetrics",
    "Schedule",
    "SharingMode",
    "Topology",
    "TopologyParams",
    "WorkloadParams",
    "audit",
    "generate_topology",
    "generate_workload",
    "run",
]
__version__ = "0.1.0"
