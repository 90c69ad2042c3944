"""Number partitioning as scheduling.

Each number becomes an application whose duration is that number; each of the
k parts becomes a sensor/base pair that can run one application at a time.
The best makespan then equals the smallest possible largest part sum.
"""
from wsnsched import gabas, oracle

for numbers, k in [((8, 7, 6, 5, 4), 2), ((4, 4, 4), 3), ((9, 7, 6, 5, 3, 2), 3)]:
    m = oracle.MnpInstance(numbers, k)
    topo, apps = oracle.mnp_to_instance(m)
    exact = oracle.brute_force_optimal(topo, apps, "shared")
    ga = gabas.evolve(topo, apps, "shared", seed=0).makespan
    print(f"{numbers} k={k}: partition {oracle.mnp_optimal(m)}, schedule {exact:g}, GA {ga:g}")
