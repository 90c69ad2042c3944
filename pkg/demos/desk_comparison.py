"""Compare every scheduler on a few desk-scale instances.

Prints mean makespan, waiting and turnaround per (algorithm, mode). Takes a
minute or two, mostly in the GA.
"""
import sys

from wsnsched import harness

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 3
cfg = harness.ExperimentConfig.preset("desk", runs=runs, base_seed=0)
rows = [r for r in harness.run_experiment(cfg) if r.kind == "mean"]
rows.sort(key=lambda r: (r.mode, r.makespan))

print(f"{'algorithm':9s} {'mode':9s} {'makespan':>9s} {'waiting':>8s} {'turnaround':>10s}")
for r in rows:
    print(f"{r.algorithm:9s} {r.mode:9s} {r.makespan:9.1f} {r.avg_waiting:8.1f} {r.avg_turnaround:10.1f}")
