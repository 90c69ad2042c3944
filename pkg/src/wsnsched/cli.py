"""Command-line entry point.

Every subcommand that draws random numbers requires ``--seed``. Options can
also come from ``--config FILE`` (``key = value`` lines, keys spelled like the
long options); flags given on the command line win. Relative ``--out`` paths
are resolved against ``$WSNSCHED_OUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import gabas, greedy, harness, oracle, simulator
from .resources import SharingMode
from .topology import Topology, generate_topology
from .workload import generate_workload, load_workload

OUT_DIR_ENV = "WSNSCHED_OUT_DIR"


class UsageError(Exception):
    pass


def _int_pair(text: str) -> tuple[int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return parts[0], parts[1]


def _float_pair(text: str) -> tuple[float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return parts[0], parts[1]


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_seed(p):
    p.add_argument("--seed", type=int, help="random seed (required)")


def _add_preset(p):
    p.add_argument("--preset", choices=sorted(harness.PRESETS), default="desk")


def _add_topology_overrides(p):
    g = p.add_argument_group("topology overrides")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--n-points", type=int)
    g.add_argument("--n-sensors", type=int)
    g.add_argument("--n-bases", type=int)
    g.add_argument("--comm-range", type=_float_pair, metavar="LO,HI")
    g.add_argument("--sensing-range", type=_float_pair, metavar="LO,HI")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)


def _add_workload_overrides(p):
    g = p.add_argument_group("workload overrides")
    g.add_argument("--n-apps", type=int)
    g.add_argument("--n-batches", type=int)
    g.add_argument("--points-per-app", type=_int_pair, metavar="LO,HI")
    g.add_argument("--duration", type=_int_pair, metavar="LO,HI")


_TOPO_KEYS = ("width", "height", "n_points", "n_sensors", "n_bases", "comm_range", "sensing_range", "alpha", "beta")
_WORK_KEYS = ("n_apps", "n_batches", "points_per_app", "duration")


def _topology_params(args):
    base = harness.PRESETS[args.preset][0]
    kw = {k: getattr(args, k) for k in _TOPO_KEYS if getattr(args, k, None) is not None}
    return replace(base, **kw)


def _workload_params(args):
    base = harness.PRESETS[args.preset][1]
    kw = {k: getattr(args, k) for k in _WORK_KEYS if getattr(args, k, None) is not None}
    return replace(base, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsnsched", description="WSN application scheduling toolkit")
    parser.add_argument("--config", help="key = value file supplying defaults for the subcommand's options")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-topology", help="generate a random topology (JSON)")
    _add_seed(p)
    _add_preset(p)
    _add_topology_overrides(p)
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("gen-workload", help="generate a random workload (JSON) for a topology")
    _add_seed(p)
    _add_preset(p)
    _add_workload_overrides(p)
    p.add_argument("--topology", required=False, help="topology JSON file")
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("simulate", help="schedule one instance and print its metrics")
    _add_seed(p)
    p.add_argument("--preset", choices=sorted(harness.PRESETS), help="generate the instance from a preset")
    _add_topology_overrides(p)
    _add_workload_overrides(p)
    p.add_argument("--topology", help="topology JSON file (instead of --preset)")
    p.add_argument("--workload", help="workload JSON file (requires --topology)")
    p.add_argument("--algorithm", default="fcfs", choices=harness.ALGORITHMS)
    p.add_argument("--mode", default="shared", choices=harness.MODES)
    p.add_argument("--trace", help="write the event trace (JSON lines) here")
    p.add_argument("--out", help="write the metrics JSON here (default: stdout)")

    p = sub.add_parser("experiment", help="run a scenario sweep and write a CSV")
    _add_seed(p)
    _add_preset(p)
    p.add_argument("--scenario", type=int, choices=range(1, 7))
    p.add_argument("--values", help="comma-separated swept values (default: the scenario's)")
    p.add_argument("--algorithms", default=",".join(harness.ALGORITHMS))
    p.add_argument("--modes", default=",".join(harness.MODES))
    p.add_argument("--runs", type=int)
    p.add_argument("--timing", action="store_true", help="record wall-clock per run (output no longer reproducible)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV file (default: stdout)")

    p = sub.add_parser("oracle", help="exact optimum of a small instance")
    p.add_argument("--mnp", type=_int_list, help="comma-separated positive integers to partition")
    p.add_argument("--k", type=int, help="number of parts (with --mnp)")
    p.add_argument("--verify", action="store_true", help="with --mnp: also solve the scheduling reduction")
    p.add_argument("--topology", help="topology JSON file (with --workload)")
    p.add_argument("--workload", help="workload JSON file (with --topology)")
    p.add_argument("--mode", default="shared", choices=harness.MODES)

    p = sub.add_parser("audit", help="check a trace against the capacity constraints")
    p.add_argument("--topology", required=True)
    p.add_argument("--workload", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--mode", default="shared", choices=harness.MODES)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config {path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # second pass: config values become defaults, so explicit flags still win
        try:
            cfg = read_config(args.config)
        except (OSError, UsageError) as exc:
            parser.error(str(exc))
        sp = _subparser(parser, args.command)
        known = {a.dest: a for a in sp._actions if a.dest != "help"}
        defaults = {}
        for key, text in cfg.items():
            if key not in known:
                parser.error(f"config {args.config}: unknown option {key!r} for {args.command}")
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                value = text.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = action.type(text) if action.type else text
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config {args.config}: bad value for {key!r}: {exc}")
                if action.choices is not None and value not in action.choices:
                    parser.error(f"config {args.config}: invalid choice for {key!r}: {text!r}")
            defaults[key] = value
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    _check(parser, args)
    return args


def _check(parser, args) -> None:
    if args.command in ("gen-topology", "gen-workload", "simulate", "experiment") and args.seed is None:
        parser.error(f"{args.command}: --seed is required")
    if args.command == "simulate":
        files = args.topology is not None or args.workload is not None
        overrides = [k for k in _TOPO_KEYS + _WORK_KEYS if getattr(args, k) is not None]
        if files and args.preset is not None:
            parser.error("simulate: --preset conflicts with --topology/--workload")
        if args.workload is not None and args.topology is None:
            parser.error("simulate: --workload requires --topology")
        if args.topology is not None and args.workload is not None and overrides:
            parser.error("simulate: generation overrides conflict with --workload")
        if args.topology is not None and any(k in _TOPO_KEYS for k in overrides):
            parser.error("simulate: topology overrides conflict with --topology")
        if args.preset is None:
            args.preset = "desk"
    if args.command == "oracle":
        if (args.mnp is None) == (args.topology is None):
            parser.error("oracle: give exactly one of --mnp or --topology/--workload")
        if args.mnp is not None and args.k is None:
            parser.error("oracle: --mnp requires --k")
        if args.mnp is None and (args.k is not None or args.verify):
            parser.error("oracle: --k/--verify only apply with --mnp")
        if args.topology is not None and args.workload is None:
            parser.error("oracle: --topology requires --workload")
    if args.command == "experiment":
        if args.runs is not None and args.runs < 1:
            parser.error("experiment: --runs must be >= 1")
        if args.jobs < 1:
            parser.error("experiment: --jobs must be >= 1")


def _out_path(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, path: str | None) -> None:
    p = _out_path(path)
    if p is None:
        sys.stdout.write(text)
    else:
        p.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _load_topology(path: str) -> Topology:
    return Topology.load(path)


def _instance(args):
    if args.topology is not None:
        topo = _load_topology(args.topology)
    else:
        ts, _, _ = harness.run_seeds(args.seed)
        topo = generate_topology(_topology_params(args), ts)
    if getattr(args, "workload", None) is not None:
        apps = load_workload(args.workload)
    else:
        _, ws, _ = harness.run_seeds(args.seed)
        apps = generate_workload(topo, _workload_params(args), ws)
    return topo, apps


def cmd_gen_topology(args) -> None:
    ts, _, _ = harness.run_seeds(args.seed)
    topo = generate_topology(_topology_params(args), ts)
    _emit(json.dumps(topo.to_dict(), indent=1) + "\n", args.out)


def cmd_gen_workload(args) -> None:
    topo, apps = _instance(args)
    meta = {"seed": args.seed, "params": _workload_params(args).to_dict()}
    doc = {"meta": meta, "applications": [a.to_dict() for a in apps]}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)


def cmd_simulate(args) -> None:
    topo, apps = _instance(args)
    _, _, gs = harness.run_seeds(args.seed)
    trace = args.trace is not None
    if args.algorithm == "gabas":
        m = gabas.schedule(topo, apps, args.mode, seed=gs, trace=trace)
    else:
        m = greedy.schedule(topo, apps, args.algorithm, args.mode, trace=trace)
    if trace:
        simulator.write_trace(m.trace, _out_path(args.trace))
    out = {"algorithm": args.algorithm, "mode": args.mode, "seed": args.seed, **m.summary()}
    _emit(_dump(out), args.out)


def cmd_experiment(args) -> None:
    values = None
    if args.values:
        values = tuple(float(v) if "." in v else int(v) for v in args.values.split(","))
    kw = dict(
        scenario=args.scenario, values=values, algorithms=args.algorithms, modes=args.modes,
        base_seed=args.seed, timing=args.timing, jobs=args.jobs,
    )
    if args.runs is not None:
        kw["runs"] = args.runs
    cfg = harness.ExperimentConfig.preset(args.preset, **kw)
    _emit(harness.to_csv(harness.run_experiment(cfg)), args.out)


def cmd_oracle(args) -> None:
    if args.mnp is not None:
        mnp = oracle.MnpInstance(tuple(args.mnp), args.k)
        best = oracle.mnp_optimal(mnp)
        if args.verify:
            topo, apps = oracle.mnp_to_instance(mnp)
            sched = oracle.brute_force_optimal(topo, apps, SharingMode.SHARED)
            if sched != best:
                raise RuntimeError(f"reduction mismatch: partition optimum {best}, schedule optimum {sched}")
        print(best)
        return
    topo = _load_topology(args.topology)
    apps = load_workload(args.workload)
    best = oracle.brute_force_optimal(topo, apps, args.mode)
    print(int(best) if float(best).is_integer() else repr(best))


def cmd_audit(args) -> int:
    topo = _load_topology(args.topology)
    apps = load_workload(args.workload)
    problems = simulator.audit_report(topo, apps, simulator.read_trace(args.trace), args.mode)
    for p in problems:
        print(p)
    print("ok" if not problems else f"{len(problems)} problem(s)")
    return 0 if not problems else 1


COMMANDS = {
    "gen-topology": cmd_gen_topology,
    "gen-workload": cmd_gen_workload,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "oracle": cmd_oracle,
    "audit": cmd_audit,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        status = COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"wsnsched: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
