"""Two applications on one sensor: sharing a data stream halves the makespan.

A single unit-capacity sensor covers one point. Both applications want that
point at rate 1. Without sharing they must take turns; with sharing one
stream serves both at once.
"""
from wsnsched import greedy
from wsnsched.topology import BaseStation, MonitoringPoint, SensorNode, Topology
from wsnsched.workload import Application, Request

topo = Topology(
    width=100, height=100,
    points=(MonitoringPoint(0, 0, 0, 0),),
    sensors=(SensorNode(0, 0, 10, 50, 100, 1.0),),
    bases=(BaseStation(0, 0, 20, 1000.0),),
    alpha=1.0, beta=1.0, link_bandwidth=100.0,
)
apps = [
    Application(0, (Request(0, 1.0),), 10.0, 0, 0.0, float("inf")),
    Application(1, (Request(0, 1.0),), 5.0, 0, 0.0, float("inf")),
]

for mode in ("unshared", "shared"):
    m = greedy.schedule(topo, apps, "fcfs", mode, trace=True)
    starts = {r.app_id: r.t0 for r in m.records}
    print(f"{mode:9s} makespan={m.makespan:5.1f} starts={starts}")
