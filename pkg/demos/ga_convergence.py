"""Watch the GA improve on one desk instance and write its per-generation log."""
from wsnsched import gabas, harness
from wsnsched.topology import DESK_TOPOLOGY, generate_topology
from wsnsched.workload import DESK_WORKLOAD, generate_workload

ts, ws, gs = harness.run_seeds(0)
topo = generate_topology(DESK_TOPOLOGY, ts)
apps = generate_workload(topo, DESK_WORKLOAD, ws)

res = gabas.evolve(topo, apps, "shared", seed=gs)
for gen, best, mean in res.history:
    print(f"gen {gen:3d} best {-best:7.1f} mean {-mean:8.1f}")
print(f"stopped after {res.generations} generations, makespan {res.makespan:g}")
res.write_log("ga_log.csv")
