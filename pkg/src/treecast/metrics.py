"""Aggregation of runs and CSV serialization."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Any, Optional, Sequence, TextIO, Union

from .core import Mode, SimConfig
from .engine import RoundLog, RunSummary

ROUNDS_COLUMNS = (
    "run_id", "round", "sends", "first_deliveries", "duplicate_receptions",
    "cumulative_informed", "active_count",
)
SUMMARY_COLUMNS = (
    "run_id", "mode", "n", "contacts", "fanout", "gossip_style", "k", "group_size",
    "origin", "failed_count", "seed", "converged", "convergence_round", "coverage",
    "residue", "total_sends", "total_duplicates", "rounds_executed",
)
AGGREGATE_COLUMNS = (
    "group_key", "runs", "convergence_rate", "mean_convergence_round", "mean_residue",
    "mean_total_sends", "mean_duplicate_ratio",
)
CURVE_COLUMNS = ("group_key", "round", "mean_informed", "min_informed", "max_informed")


def group_key(config: SimConfig) -> str:
    """Every config parameter except the seed, as a stable text key."""
    parts = [config.mode.value, f"n={config.n}"]
    if config.mode is Mode.GOSSIP:
        k = "inf" if config.k is None else str(config.k)
        parts += [
            f"contacts={config.contact_count}",
            f"fanout={config.fanout}",
            f"style={config.gossip_style.value}",
            f"k={k}",
        ]
    elif config.mode is Mode.TREE_CLUSTER:
        parts.append(f"g={config.group_size}")
    failed = "+".join(str(v) for v in sorted(config.failed)) or "-"
    parts += [f"origin={config.origin}", f"failed={failed}", f"max_rounds={config.max_rounds}"]
    return " ".join(parts)


@dataclass(frozen=True)
class Aggregate:
    group_key: str
    runs: int
    convergence_rate: float
    mean_convergence_round: Optional[float]  # None when no run converged
    mean_residue: float
    mean_total_sends: float
    mean_duplicate_ratio: float
    mean_informed: tuple[float, ...] = ()
    min_informed: tuple[int, ...] = ()
    max_informed: tuple[int, ...] = ()


def aggregate(
    summaries: Sequence[RunSummary],
    logs: Optional[Sequence[Sequence[RoundLog]]] = None,
) -> Aggregate:
    """Means over runs sharing one group key.

    ``logs[i]`` belongs to ``summaries[i]``. Curves are step-held: a run that
    terminated early keeps its final informed count in later rounds.
    Never-converged runs are left out of the mean convergence round and show
    up in the convergence rate instead. Float sums use ``math.fsum`` so the
    result does not depend on input order.
    """
    if not summaries:
        raise ValueError("aggregate needs at least one run summary")
    keys = {group_key(s.config) for s in summaries}
    if len(keys) != 1:
        raise ValueError(f"summaries span {len(keys)} group keys: {sorted(keys)}")
    if logs is not None and len(logs) != len(summaries):
        raise ValueError("logs must align with summaries")
    runs = len(summaries)
    converged = [s.convergence_round for s in summaries if s.convergence_round is not None]
    agg = dict(
        group_key=keys.pop(),
        runs=runs,
        convergence_rate=len(converged) / runs,
        mean_convergence_round=sum(converged) / len(converged) if converged else None,
        mean_residue=math.fsum(s.residue for s in summaries) / runs,
        mean_total_sends=sum(s.total_sends for s in summaries) / runs,
        mean_duplicate_ratio=math.fsum(s.duplicate_ratio for s in summaries) / runs,
    )
    if logs:
        length = max(len(run_logs) for run_logs in logs)
        curves = [_step_held([r.cumulative_informed for r in run_logs], length) for run_logs in logs]
        columns = list(zip(*curves))
        agg.update(
            mean_informed=tuple(sum(col) / runs for col in columns),
            min_informed=tuple(min(col) for col in columns),
            max_informed=tuple(max(col) for col in columns),
        )
    return Aggregate(**agg)


def _step_held(curve: list[int], length: int) -> list[int]:
    return curve + [curve[-1]] * (length - len(curve))


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _summary_row(s: RunSummary) -> list[Any]:
    c = s.config
    gossip = c.mode is Mode.GOSSIP
    return [
        s.run_id, c.mode.value, c.n,
        c.contact_count if gossip else None,
        c.fanout if gossip else None,
        c.gossip_style.value if gossip else None,
        ("inf" if c.k is None else c.k) if gossip else None,
        c.group_size if c.mode is Mode.TREE_CLUSTER else None,
        c.origin, len(c.failed), c.seed, s.converged,
        "never" if s.convergence_round is None else s.convergence_round,
        s.coverage, s.residue, s.total_sends, s.total_duplicates, s.rounds_executed,
    ]


def _rows(rows: Sequence[Any], kind: str) -> tuple[tuple[str, ...], list[list[Any]]]:
    if kind == "rounds":
        return ROUNDS_COLUMNS, [
            [r.run_id, r.round, r.sends, r.first_deliveries, r.duplicate_receptions,
             r.cumulative_informed, r.active_count]
            for r in rows
        ]
    if kind == "summary":
        return SUMMARY_COLUMNS, [_summary_row(s) for s in rows]
    if kind == "aggregate":
        return AGGREGATE_COLUMNS, [
            [a.group_key, a.runs, a.convergence_rate, a.mean_convergence_round, a.mean_residue,
             a.mean_total_sends, a.mean_duplicate_ratio]
            for a in rows
        ]
    if kind == "curves":
        return CURVE_COLUMNS, [
            [a.group_key, rnd, mean, lo, hi]
            for a in rows
            for rnd, (mean, lo, hi) in enumerate(zip(a.mean_informed, a.min_informed, a.max_informed))
        ]
    raise ValueError(f"unknown CSV kind {kind!r}")


_KINDS = {RoundLog: "rounds", RunSummary: "summary", Aggregate: "aggregate"}


def to_csv(rows: Sequence[Any], kind: Optional[str] = None) -> str:
    """Render rows as CSV text: header first, LF endings, floats via ``repr``.

    ``kind`` is one of rounds, summary, aggregate, curves. It is inferred
    from the row type when omitted, which requires a non-empty list.
    """
    if kind is None:
        if not rows:
            raise ValueError("kind is required for an empty row list")
        kind = _KINDS.get(type(rows[0]))
        if kind is None:
            raise ValueError(f"cannot write rows of type {type(rows[0]).__name__}")
    if any(type(r) is not type(rows[0]) for r in rows):
        raise ValueError("rows must all have the same type")
    header, body = _rows(rows, kind)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_fmt(v) for v in row] for row in body)
    return buf.getvalue()


def write_csv(
    rows: Sequence[Any],
    destination: Union[str, os.PathLike, TextIO],
    kind: Optional[str] = None,
) -> int:
    """Write rows to a path or text stream; returns the number of bytes written."""
    data = to_csv(rows, kind).encode("utf-8")
    if hasattr(destination, "write"):
        destination.write(data.decode("utf-8"))
        return len(data)
    try:
        with open(destination, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {os.fspath(destination)}: {exc.strerror}") from exc
    return len(data)
