"""Identifiers, deterministic randomness and run configuration.

The generator is SplitMix64. It is implemented here rather than taken from
:mod:`random` so that other implementations can reproduce the exact draw
sequence, and with it every golden CSV, from the seed alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

NodeId = int
MessageId = int

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Domain tag for topology streams; round numbers never reach it.
TOPOLOGY_STREAM = 1 << 63


class ConfigError(ValueError):
    """Invalid configuration. ``problems`` holds (field, message) pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{name}: {msg}" for name, msg in problems))


def mix64(z: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13)."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a seed; distinct key tuples give unrelated streams."""
    h = mix64((seed + GOLDEN_GAMMA) & MASK64)
    for key in keys:
        h = mix64((h ^ mix64((key + GOLDEN_GAMMA) & MASK64)) & MASK64)
    return h


class Prng:
    """SplitMix64 generator.

    Each call to :meth:`next_u64` advances the state by the golden gamma and
    returns the mixed state. A zero seed is fine: the first output is
    ``mix64(gamma)``, not zero.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """Integer in ``[0, bound)`` from exactly one draw.

        Uses the high word of ``draw * bound``. The bias is at most
        ``bound / 2**64`` and is accepted in exchange for a fixed draw count.
        """
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return (self.next_u64() * bound) >> 64

    def split(self, *keys: int) -> "Prng":
        """Independent child stream keyed on the current seed state and ``keys``.

        Does not advance this generator, so children can be derived in any
        order.
        """
        return Prng(derive_seed(self.state, *keys))


def prng_new(seed: int) -> Prng:
    return Prng(seed)


def choose_distinct(prng: Prng, population: int, count: int) -> list[int]:
    """Uniform sample of ``count`` distinct integers from ``range(population)``.

    Sparse Fisher-Yates: draw ``i`` swaps position ``i`` with a uniform
    position in ``[i, population)``. Consumes exactly ``count`` draws and
    returns the sample in selection order.
    """
    if count < 0 or population < 0:
        raise ValueError("population and count must be non-negative")
    if count > population:
        raise ValueError(f"cannot choose {count} distinct values from {population}")
    moved: dict[int, int] = {}
    out = []
    for i in range(count):
        j = i + prng.below(population - i)
        out.append(moved.get(j, j))
        moved[j] = moved.get(i, i)
    return out


class Mode(str, enum.Enum):
    GOSSIP = "gossip"
    TREE = "tree"
    TREE_CLUSTER = "tree_cluster"


class GossipStyle(str, enum.Enum):
    PUSH = "push"
    PULL = "pull"
    PUSH_PULL = "push_pull"


@dataclass(frozen=True)
class SimConfig:
    """One simulated broadcast.

    ``contacts=None`` means every node knows every other node. ``k=None``
    disables rumor decay (the k -> infinity limit).
    """

    mode: Mode = Mode.TREE
    n: int = 15
    contacts: Optional[int] = None
    fanout: int = 1
    gossip_style: GossipStyle = GossipStyle.PUSH
    k: Optional[int] = None
    group_size: int = 3
    origin: NodeId = 0
    failed: frozenset[NodeId] = field(default_factory=frozenset)
    max_rounds: int = 64
    seed: int = 0

    def __post_init__(self):
        # Accept plain strings / iterables from callers and JSON.
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "gossip_style", GossipStyle(self.gossip_style))
        object.__setattr__(self, "failed", frozenset(self.failed))

    @property
    def contact_count(self) -> int:
        return self.n - 1 if self.contacts is None else self.contacts

    def problems(self) -> list[tuple[str, str]]:
        out = []

        def is_int(v: Any) -> bool:
            return isinstance(v, int) and not isinstance(v, bool)

        if not is_int(self.n) or self.n < 1:
            out.append(("n", f"must be a positive integer, got {self.n!r}"))
            return out
        n = self.n
        if not is_int(self.origin) or not 0 <= self.origin < n:
            out.append(("origin", f"must be a node index in [0, {n}), got {self.origin!r}"))
        bad = sorted(f for f in self.failed if not is_int(f) or not 0 <= f < n)
        if bad:
            out.append(("failed", f"node indices out of range: {bad}"))
        if self.origin in self.failed:
            out.append(("failed", f"origin {self.origin} cannot be failed"))
        if not is_int(self.max_rounds) or self.max_rounds < 0:
            out.append(("max_rounds", f"must be a non-negative integer, got {self.max_rounds!r}"))
        if not is_int(self.seed) or not 0 <= self.seed <= MASK64:
            out.append(("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}"))
        if self.mode is Mode.GOSSIP:
            c = self.contact_count
            if not is_int(c) or not 1 <= c <= n - 1:
                out.append(("contacts", f"must satisfy 1 <= contacts <= n - 1 = {n - 1}, got {c!r}"))
            elif not is_int(self.fanout) or not 1 <= self.fanout <= c:
                out.append(("fanout", f"must satisfy 1 <= fanout <= contacts = {c}, got {self.fanout!r}"))
            if self.k is not None and (not is_int(self.k) or self.k < 1):
                out.append(("k", f"must be a positive integer or null, got {self.k!r}"))
        if self.mode is Mode.TREE_CLUSTER:
            g = self.group_size
            if not is_int(g) or g < 1:
                out.append(("group_size", f"must be a positive integer, got {g!r}"))
            elif n % g:
                out.append(("group_size", f"n = {n} is not a multiple of group_size = {g}"))
        return out

    def validate(self) -> "SimConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def with_changes(self, **changes: Any) -> "SimConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, enum.Enum):
                value = value.value
            elif isinstance(value, frozenset):
                value = sorted(value)
            out[f.name] = value
        return out


def make_config(**values: Any) -> SimConfig:
    """Build a config from loose values (strings for enums, lists for ``failed``)."""
    problems = []
    for name, kind in (("mode", Mode), ("gossip_style", GossipStyle)):
        if name in values:
            try:
                values[name] = kind(values[name])
            except ValueError:
                choices = ", ".join(m.value for m in kind)
                problems.append((name, f"must be one of {choices}, got {values[name]!r}"))
    if "failed" in values:
        try:
            values["failed"] = frozenset(values["failed"])
        except TypeError:
            problems.append(("failed", f"must be a list of node indices, got {values['failed']!r}"))
    if problems:
        raise ConfigError(problems)
    try:
        return SimConfig(**values)
    except TypeError as exc:
        raise ConfigError([("config", str(exc))]) from None


class MessageIds:
    """Per-run counter handing out message ids."""

    def __init__(self, start: int = 1):
        self._next = start

    def new(self) -> MessageId:
        mid = self._next
        self._next += 1
        return mid

