"""``treecast`` command line: ``run`` experiments and export ``topology``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import experiment, metrics
from .core import ConfigError, Mode, Prng
from .engine import run_sweep
from .topology import build_binary_tree, build_clustered_tree, build_contact_graph, to_edge_list

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
DEFAULT_OUT_DIR = "treecast-out"


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",")]


def _str_list(text: str) -> list[str]:
    return text.split(",")


def _k_list(text: str) -> list[Optional[int]]:
    return [None if part == "inf" else int(part) for part in text.split(",")]


def _failed(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treecast", description="Broadcast propagation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSVs")
    run.add_argument("--config", help="JSON experiment file")
    run.add_argument("--mode", type=_str_list, help="gossip, tree, tree_cluster (comma list)")
    run.add_argument("--n", type=_int_list, help="node count (comma list)")
    run.add_argument("--contacts", type=_int_list, help="gossip contact-list size (comma list)")
    run.add_argument("--fanout", type=_int_list, help="gossip peers per round (comma list)")
    run.add_argument("--k", type=_k_list, help="decay parameter, 'inf' disables (comma list)")
    run.add_argument("--group-size", type=_int_list, help="cluster group size (comma list)")
    run.add_argument("--style", dest="gossip_style", choices=["push", "pull", "push_pull"])
    run.add_argument("--origin", type=int)
    run.add_argument("--failed", type=_failed, help="comma list of crashed nodes")
    run.add_argument("--max-rounds", type=int)
    run.add_argument("--seed", type=int, help="base seed")
    run.add_argument("--seeds", type=int, help="number of seeds")
    run.add_argument("--out", help=f"output directory (default $TREECAST_OUT_DIR or {DEFAULT_OUT_DIR})")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    topo = sub.add_parser("topology", help="print an overlay as an edge list")
    topo.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    topo.add_argument("--n", type=int, required=True)
    topo.add_argument("--group-size", type=int, default=3)
    topo.add_argument("--contacts", type=int)
    topo.add_argument("--seed", type=int, default=0)
    topo.add_argument("--out", help="write to this file instead of stdout")
    return parser


def _experiment_from_args(args: argparse.Namespace) -> experiment.Experiment:
    exp = experiment.load(args.config) if args.config else experiment.Experiment()
    for axis in experiment.AXES:
        value = getattr(args, axis)
        if value is not None:
            exp.axes[axis] = value
    for name in experiment.SCALARS:
        value = getattr(args, name)
        if value is not None:
            exp.scalars[name] = value
    if args.seed is not None:
        exp.seed_base = args.seed
    if args.seeds is not None:
        exp.seed_count = args.seeds
    if args.out is not None:
        exp.output_dir = args.out
    return exp


def _report(aggregates: list[metrics.Aggregate]) -> str:
    parts = []
    for a in aggregates:
        rounds = "n/a" if a.mean_convergence_round is None else f"{a.mean_convergence_round:.2f}"
        parts.append(
            f"{a.group_key}: converged in {a.convergence_rate:.0%} of {a.runs} runs, "
            f"mean convergence round {rounds}, mean sends {a.mean_total_sends:.1f}, "
            f"duplicate ratio {a.mean_duplicate_ratio:.3f}, mean residue {a.mean_residue:.4f}."
        )
    return " ".join(parts)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        exp = _experiment_from_args(args)
        base = exp.base_config()
        if exp.seed_count < 1:
            raise ConfigError([("seeds", "count must be positive")])
    except ConfigError as exc:
        print(f"treecast: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cells = run_sweep(base, exp.seeds, exp.overrides(), workers=max(1, args.jobs))
    good = [c for c in cells if c.error is None]
    for c in cells:
        if c.error is not None:
            print(f"treecast: skipped run {c.run_id}: {c.error}", file=sys.stderr)
    if not good:
        print("treecast: config error: no valid configuration in the sweep", file=sys.stderr)
        return EXIT_CONFIG

    groups: dict[str, list] = {}
    for c in good:
        groups.setdefault(metrics.group_key(c.config), []).append(c)
    aggregates = [
        metrics.aggregate([c.summary for c in members], [c.logs for c in members])
        for members in groups.values()
    ]

    out_dir = Path(exp.output_dir or os.environ.get("TREECAST_OUT_DIR") or DEFAULT_OUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_csv([r for c in good for r in c.logs], out_dir / "rounds.csv", "rounds")
    metrics.write_csv([c.summary for c in good], out_dir / "summary.csv", "summary")
    metrics.write_csv(aggregates, out_dir / "aggregate.csv", "aggregate")
    metrics.write_csv(aggregates, out_dir / "curves.csv", "curves")

    print(f"{len(good)} runs in {len(aggregates)} groups, CSVs written to {out_dir}.")
    print(_report(aggregates))
    return EXIT_OK


def cmd_topology(args: argparse.Namespace) -> int:
    try:
        if args.mode == Mode.TREE.value:
            overlay = build_binary_tree(args.n)
        elif args.mode == Mode.TREE_CLUSTER.value:
            overlay = build_clustered_tree(args.n, args.group_size)
        else:
            contacts = args.n - 1 if args.contacts is None else args.contacts
            overlay = build_contact_graph(args.n, contacts, Prng(args.seed))
    except ValueError as exc:
        print(f"treecast: invalid topology: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = to_edge_list(overlay)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="treecast: %(message)s")
    args = build_parser().parse_args(argv)
    handler = cmd_run if args.command == "run" else cmd_topology
    try:
        return handler(args)
    except OSError as exc:
        print(f"treecast: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any simulator failure maps to exit 1
        print(f"treecast: runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
