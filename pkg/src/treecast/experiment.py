"""Experiment files: a JSON run configuration with optional sweep axes.

Example::

    {
      "mode": ["tree", "tree_cluster", "gossip"],
      "n": 1023,
      "contacts": 20,
      "k": null,
      "group_size": 3,
      "seeds": {"count": 100, "base": 1},
      "output_dir": "out/compare"
    }

``mode``, ``n``, ``contacts``, ``fanout``, ``k`` and ``group_size`` accept a
single value or a list. Lists are expanded as a cartesian product in that
key order, with seeds innermost.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .core import ConfigError, SimConfig, make_config

AXES = ("mode", "n", "contacts", "fanout", "k", "group_size")
SCALARS = ("gossip_style", "origin", "failed", "max_rounds")
KEYS = AXES + SCALARS + ("seeds", "output_dir")


@dataclass
class Experiment:
    axes: dict[str, list[Any]] = field(default_factory=dict)
    scalars: dict[str, Any] = field(default_factory=dict)
    seed_count: int = 1
    seed_base: int = 0
    output_dir: Optional[str] = None

    @property
    def seeds(self) -> list[int]:
        return [self.seed_base + i for i in range(self.seed_count)]

    def overrides(self) -> list[dict[str, Any]]:
        """Axis combinations in fixed key order (last axis varies fastest)."""
        names = [a for a in AXES if a in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.axes[a] for a in names))]

    def base_config(self) -> SimConfig:
        return make_config(**self.scalars)

    def configs(self) -> list[SimConfig]:
        """Every expanded config with its seed; invalid ones raise ConfigError."""
        base = self.base_config()
        return [
            base.with_changes(**o, seed=s).validate()
            for o in self.overrides()
            for s in self.seeds
        ]


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_k(v: Any) -> Optional[int]:
    if v is None or v == "inf":
        return None
    return v


def from_dict(doc: Any, source: str = "<config>") -> Experiment:
    """Strictly validate a decoded experiment document."""
    if not isinstance(doc, dict):
        raise ConfigError([(source, "top level must be a JSON object")])
    problems = [(f"{source}: {key}", "unknown key") for key in doc if key not in KEYS]
    exp = Experiment()
    for key in AXES:
        if key not in doc:
            continue
        values = doc[key] if isinstance(doc[key], list) else [doc[key]]
        if not values:
            problems.append((f"{source}: {key}", "axis list must not be empty"))
            continue
        if key == "k":
            values = [_parse_k(v) for v in values]
        exp.axes[key] = values
    for key in SCALARS:
        if key in doc:
            exp.scalars[key] = doc[key]
    if "seeds" in doc:
        seeds = doc["seeds"]
        if not isinstance(seeds, dict) or set(seeds) - {"count", "base"}:
            problems.append((f"{source}: seeds", 'must be an object with keys "count" and "base"'))
        else:
            count, base = seeds.get("count", 1), seeds.get("base", 0)
            if not _is_int(count) or count < 1:
                problems.append((f"{source}: seeds.count", f"must be a positive integer, got {count!r}"))
            if not _is_int(base) or base < 0:
                problems.append((f"{source}: seeds.base", f"must be a non-negative integer, got {base!r}"))
            exp.seed_count, exp.seed_base = count, base
    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str):
            problems.append((f"{source}: output_dir", "must be a string"))
        else:
            exp.output_dir = doc["output_dir"]
    if problems:
        raise ConfigError(problems)
    return exp


def load(path: str | Path) -> Experiment:
    """Read and validate an experiment file; errors carry the path and line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read config: {exc.strerror or exc}")]) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)]) from None
    return from_dict(doc, str(path))
