"""Command line interface.

Subcommands: ``problem describe``, ``invariance``, ``vc``, ``sweep``,
``train-study`` and ``report``. Sweeps and studies read a TOML config (or a
previous run's manifest.json); ``--seed``, ``--workers`` and ``--out``
override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

from . import __version__
from .errors import ExplabError
from .harness import (
    load_config_file, manifest_for, run_learning_sweep, run_training_study,
    study_config_from_dict, sweep_config_from_dict,
)
from .invariance import invariance_report
from .learners import HypothesisClass
from .problems import ExactProblem, IdentityExplainer, parse_problem
from .report import emit_report, read_records_csv
from .vcdim import vc_ea

log = logging.getLogger("explab")


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _exact(spec: str) -> ExactProblem:
    problem = parse_problem(spec)
    if not isinstance(problem, ExactProblem):
        raise SystemExit(f"{spec} is not an exact problem")
    return problem


def cmd_describe(args) -> int:
    problem = parse_problem(args.problem)
    if isinstance(problem, ExactProblem):
        dist = problem.label_distribution()
        out = {
            "name": problem.name,
            "kind": "exact",
            "num_classes": problem.num_classes,
            "entries": len(problem.entries),
            "distinct_graphs": len(problem.distinct_graphs()),
            "label_marginal": [float(sum(e.prob for e in problem.entries if e.label == y))
                               for y in range(problem.num_classes)],
            "noisy_graphs": sum(1 for d in dist.values() if (d > 0).sum() > 1),
            "graphs": [{"nodes": e.graph.node_count, "edges": e.graph.edge_count, "label": e.label,
                        "prob": e.prob, "explanation_edges": len(e.explanation.edge_subset)}
                       for e in problem.entries],
        }
        if args.out:
            problem.save(args.out)
    else:
        sample = problem.draw_many(args.samples, args.seed)
        out = {
            "name": problem.name,
            "kind": "sampler",
            "num_classes": problem.num_classes,
            "params": problem.params,
            "sample_size": len(sample),
            "mean_nodes": sum(lg.graph.node_count for lg, _ in sample) / len(sample),
            "mean_edges": sum(lg.graph.edge_count for lg, _ in sample) / len(sample),
            "label_counts": [sum(1 for lg, _ in sample if lg.label == y) for y in range(problem.num_classes)],
        }
    _print_json(out)
    return 0


def cmd_invariance(args) -> int:
    report = invariance_report(_exact(args.problem), strict=False)
    _print_json(report.to_json_dict())
    return 0 if report.zeta_bound_holds and report.bayes_order_holds else 1


def cmd_vc(args) -> int:
    problem = _exact(args.problem)
    H = HypothesisClass(args.hypothesis, problem.num_classes)
    explainer = IdentityExplainer() if args.explainer == "identity" else problem.explainer
    graphs = [g for g, _, _ in problem.distinct_graphs()]
    cert = vc_ea(H, explainer, graphs, args.cap)
    _print_json({"problem": problem.name, "hypothesis": args.hypothesis,
                 "explainer": args.explainer, **cert.to_json_dict()})
    return 0


def _load_section(args, section: str) -> dict:
    data = load_config_file(args.config) if args.config else {}
    if section not in data and args.config:
        raise SystemExit(f"{args.config} has no [{section}] section")
    return dict(data.get(section, {}))


def _overrides(cfg, args):
    changes = {k: v for k, v in (("seed", args.seed), ("workers", args.workers), ("out", args.out)) if v is not None}
    return replace(cfg, **changes)


def _finish(kind: str, cfg, records, started: float) -> int:
    manifest = manifest_for(kind, cfg, records, started, time.time())
    paths = emit_report(records, cfg.out, manifest)
    failed = sum(r.status != "ok" for r in records)
    print(f"{len(records)} records ({failed} failed) -> {paths['records'].parent}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _overrides(sweep_config_from_dict(_load_section(args, "sweep")), args)
    started = time.time()
    return _finish("sweep", cfg, run_learning_sweep(cfg), started)


def cmd_study(args) -> int:
    cfg = _overrides(study_config_from_dict(_load_section(args, "study")), args)
    started = time.time()
    return _finish("study", cfg, run_training_study(cfg), started)


def cmd_report(args) -> int:
    records = read_records_csv(f"{args.out}/records.csv")
    paths = emit_report(records, args.out)
    print(" ".join(str(p) for p in paths.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("problem", help="inspect a problem")
    psub = p.add_subparsers(dest="action", required=True)
    d = psub.add_parser("describe", help="summarize a problem as JSON")
    d.add_argument("--problem", default="example1:12")
    d.add_argument("--samples", type=int, default=100, help="draws summarized for sampler problems")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", help="also write an exact problem's JSON here")
    d.set_defaults(func=cmd_describe)

    p = sub.add_parser("invariance", help="invariance report; exit 1 if an inequality fails")
    p.add_argument("--problem", default="example1:12")
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("vc", help="explanation-assisted VC dimension with a witness")
    p.add_argument("--problem", default="example1:12")
    p.add_argument("--hypothesis", choices=("table", "edge_count"), default="table")
    p.add_argument("--explainer", choices=("problem", "identity"), default="problem")
    p.add_argument("--cap", type=int, default=None, help="largest set size searched")
    p.set_defaults(func=cmd_vc)

    for name, func, help_ in (("sweep", cmd_sweep, "learning-curve sweep with exact errors"),
                              ("train-study", cmd_study, "GNN augmentation study")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="TOML config or a previous manifest.json")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="rebuild summary and figures from records.csv")
    p.add_argument("--out", required=True, help="run directory holding records.csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ExplabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
