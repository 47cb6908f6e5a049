"""Command line entry point.

    meshca generate  [--config F] --seed N [--out DIR] [--nodes N --density D --cc C ...]
    meshca assign    [--config F] --seed N [--out DIR] [--topology FILE] [--schemes A,B]
    meshca metrics   --topology FILE --ca FILE [--ir-tr-ratio X]
    meshca simulate  [--config F] --seed N [--out DIR] [--topology FILE] [--schemes A,B]
    meshca evaluate  [--config F] --seed N [--out DIR] [--topology FILE] [--schemes A,B]

Exit codes: 0 ok, 1 usage/config error, 2 infeasible input, 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import channel_assignment as ca_mod
from .conflict_graph import ConflictGraphError, build_emmcg
from .evaluation import EvaluationError
from .interference_metrics import MetricError, all_metrics, format_metrics_csv
from .netsim import SimError, format_results_csv
from .pipeline import (ConfigError, assign_all, load_config, obtain_topology, run_pipeline,
                       simulate_all)
from .topology import (TopologyError, UnreachableTargets, global_metrics, read_topology,
                       validate_topology, write_topology)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_RUNTIME = 0, 1, 2, 3

_TAGS = [
    (UnreachableTargets, "topology", EXIT_INFEASIBLE),
    (TopologyError, "topology", EXIT_RUNTIME),
    (ca_mod.BrokenLinks, "channel_assignment", EXIT_INFEASIBLE),
    (ca_mod.AssignmentError, "channel_assignment", EXIT_RUNTIME),
    (ConflictGraphError, "conflict_graph", EXIT_RUNTIME),
    (MetricError, "interference_metrics", EXIT_RUNTIME),
    (SimError, "netsim", EXIT_INFEASIBLE),
    (EvaluationError, "evaluation", EXIT_RUNTIME),
    (ConfigError, "config", EXIT_USAGE),
]


def _common(p: argparse.ArgumentParser, topology: bool = True) -> None:
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seed", type=int, help="master seed (required here or in the config)")
    p.add_argument("--out", help="output directory")
    if topology:
        p.add_argument("--topology", help="topology JSON file instead of generating one")
    p.add_argument("--schemes", help="comma-separated CA schemes")
    p.add_argument("--channels", type=int, dest="channel_count")
    p.add_argument("--ir-tr-ratio", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for the simulation grid")
    p.add_argument("-v", "--verbose", action="store_true")


def _generation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--density-tol", type=float)
    p.add_argument("--cc", type=float)
    p.add_argument("--cc-tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meshca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate an RWMN topology")
    _common(p, topology=False)
    _generation_flags(p)

    p = sub.add_parser("assign", help="run CA schemes and write assignment files")
    _common(p)
    _generation_flags(p)

    p = sub.add_parser("metrics", help="print TID CDAL CXLS for one assignment")
    p.add_argument("--topology", required=True)
    p.add_argument("--ca", required=True)
    p.add_argument("--ir-tr-ratio", type=int, default=2)

    p = sub.add_parser("simulate", help="run the simulation grid and write results CSV")
    _common(p)
    _generation_flags(p)

    p = sub.add_parser("evaluate", help="run the full pipeline and print the DoC grid")
    _common(p)
    _generation_flags(p)
    return parser


def _config_from(args):
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "topology_file": getattr(args, "topology", None),
        "schemes": args.schemes.split(",") if args.schemes else None,
        "channel_count": args.channel_count,
        "ir_tr_ratio": args.ir_tr_ratio,
        "jobs": args.jobs,
        "generate.node_count": getattr(args, "nodes", None),
        "generate.density_target": getattr(args, "density", None),
        "generate.density_tol": getattr(args, "density_tol", None),
        "generate.cc_target": getattr(args, "cc", None),
        "generate.cc_tol": getattr(args, "cc_tol", None),
    }
    return load_config(args.config, overrides)


def cmd_generate(args) -> int:
    cfg = _config_from(args)
    targets = cfg.targets()
    topo = obtain_topology(cfg)
    out = Path(cfg.out) / "topology"
    out.mkdir(parents=True, exist_ok=True)
    write_topology(topo, out / "topology.json")
    gm = global_metrics(topo)
    for key, value in gm.as_dict().items():
        print(f"{key:<24} {value:.4f}" if isinstance(value, float) else f"{key:<24} {value}")
    print(validate_topology(topo, targets))
    print(f"wrote {out / 'topology.json'}")
    return EXIT_OK


def cmd_assign(args) -> int:
    cfg = _config_from(args)
    topo = obtain_topology(cfg)
    cg = build_emmcg(topo, cfg.ir_tr_ratio)
    out = Path(cfg.out) / "assignments"
    out.mkdir(parents=True, exist_ok=True)
    metrics = {}
    for scheme, ca in assign_all(cfg, topo, cg).items():
        ca_mod.write_assignment(topo, ca, out / f"{scheme}.ca")
        lcm, broken = ca_mod.live_link_channels(topo, ca)
        metrics[scheme] = all_metrics(topo, lcm, cg, cfg.channel_count)
        print(f"{scheme:<8} broken_links={len(broken)}")
    report = Path(cfg.out) / "report"
    report.mkdir(parents=True, exist_ok=True)
    (report / "metrics.csv").write_text(format_metrics_csv(metrics))
    sys.stdout.write(format_metrics_csv(metrics))
    return EXIT_OK


def cmd_metrics(args) -> int:
    topo = read_topology(args.topology)
    ca = ca_mod.read_assignment(args.ca, topo)
    lcm = ca_mod.resolve_link_channels(topo, ca)
    cg = build_emmcg(topo, args.ir_tr_ratio)
    m = all_metrics(topo, lcm, cg, ca.channel_count)
    print("TID CDAL CXLS")
    print(f"{m['TID']} {m['CDAL']:.6f} {m['CXLS']}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config_from(args)
    topo = obtain_topology(cfg)
    cg = build_emmcg(topo, cfg.ir_tr_ratio)
    lcms = {s: ca_mod.live_link_channels(topo, ca)[0] for s, ca in assign_all(cfg, topo, cg).items()}
    rows = simulate_all(cfg, topo, cg, lcms)
    out = Path(cfg.out) / "results"
    out.mkdir(parents=True, exist_ok=True)
    text = format_results_csv(rows)
    (out / "results.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config_from(args)
    result = run_pipeline(cfg)
    print(result.report.doc_table())
    print(f"\nwrote {cfg.out}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "assign": cmd_assign,
    "metrics": cmd_metrics,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # map every failure to a tagged diagnostic and exit code
        for cls, tag, code in _TAGS:
            if isinstance(exc, cls):
                print(f"meshca: [{tag}] {exc}", file=sys.stderr)
                return code
        if isinstance(exc, (OSError, ValueError, TypeError)):
            print(f"meshca: [io] {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        raise


if __name__ == "__main__":
    sys.exit(main())
