"""Run driver: build the overlay, inject failures, iterate protocol steps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, NamedTuple, Optional, Sequence

from .core import ConfigError, GossipStyle, MessageIds, Mode, Prng, SimConfig
from .protocols import (
    UNINFORMED,
    GossipParams,
    NodeState,
    Send,
    flood_step,
    gossip_step,
    origin_state,
)
from .topology import Overlay, build_binary_tree, build_clustered_tree, build_contact_graph

log = logging.getLogger(__name__)


class RoundLog(NamedTuple):
    """Traffic of one round. Round 0 is the injection at the origin."""

    round: int
    sends: int
    first_deliveries: int
    duplicate_receptions: int
    dropped: int
    cumulative_informed: int
    active_count: int
    run_id: int = 0


@dataclass(frozen=True)
class RunSummary:
    config: SimConfig
    converged: bool
    convergence_round: Optional[int]  # None: never converged
    coverage: float
    residue: float
    total_sends: int
    total_duplicates: int
    total_dropped: int
    rounds_executed: int
    informed: int
    alive: int
    run_id: int = 0

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def duplicate_ratio(self) -> float:
        return self.total_duplicates / self.total_sends if self.total_sends else 0.0


@dataclass
class Trace:
    summary: RunSummary
    logs: list[RoundLog]
    sends: list[Send] = field(default_factory=list)
    states: list[NodeState] = field(default_factory=list)
    message: int = 0


@lru_cache(maxsize=32)
def _tree(n: int) -> Overlay:
    return build_binary_tree(n)


@lru_cache(maxsize=32)
def _clustered(n: int, group_size: int) -> Overlay:
    return build_clustered_tree(n, group_size)


@lru_cache(maxsize=256)
def _contacts(n: int, contacts: int, seed: int) -> Overlay:
    return build_contact_graph(n, contacts, Prng(seed))


def build_overlay(config: SimConfig) -> Overlay:
    """Overlay for ``config``. Overlays are immutable, so builds are cached."""
    if config.mode is Mode.TREE:
        return _tree(config.n)
    if config.mode is Mode.TREE_CLUSTER:
        return _clustered(config.n, config.group_size)
    overlay = _contacts(config.n, config.contact_count, config.seed)
    if not overlay.weakly_connected:
        log.warning("contact graph n=%d contacts=%d seed=%d is not weakly connected",
                    config.n, config.contact_count, config.seed)
    return overlay


def _gossip_can_act(overlay: Overlay, states: Sequence[NodeState], style: GossipStyle, failed) -> bool:
    """True while some future round could still send anything."""
    if style is not GossipStyle.PULL:
        if any(s.active for v, s in enumerate(states) if v not in failed):
            return True
    if style is not GossipStyle.PUSH:
        for v, s in enumerate(states):
            if s.informed or v in failed:
                continue
            if any(states[u].informed and u not in failed for u in overlay.neighbors[v]):
                return True
    return False


def simulate(config: SimConfig, *, record_sends: bool = False, run_id: int = 0) -> Trace:
    """Run one broadcast to termination.

    The run stops before the first round in which nothing could be sent:
    for tree modes, when no node forwards any more; for gossip, when no
    node is still spreading and no pull could reach an informed contact.
    ``max_rounds`` caps the run otherwise.
    """
    config.validate()
    overlay = build_overlay(config)
    failed = config.failed
    alive = config.n - len(failed)
    message = MessageIds().new()
    gossip = config.mode is Mode.GOSSIP
    params = GossipParams(config.fanout, config.gossip_style, config.k)
    prng = Prng(config.seed)

    states: list[NodeState] = [UNINFORMED] * config.n
    states[config.origin] = origin_state(message, spreading=gossip)
    informed = 1
    logs = [RoundLog(0, 0, 0, 0, 0, informed, 1 if gossip else 0, run_id)]
    convergence_round = 0 if informed == alive else None
    frontier = [config.origin]
    sends: list[Send] = []
    totals = [0, 0, 0]

    for rnd in range(1, config.max_rounds + 1):
        if gossip:
            if not _gossip_can_act(overlay, states, config.gossip_style, failed):
                break
            step = gossip_step(overlay, states, rnd, params, prng, message=message, failed=failed)
        else:
            # The overlay came from build_overlay, so the kind check in
            # tree_step / cluster_step is skipped.
            step = flood_step(overlay, states, rnd, message=message, failed=failed, frontier=frontier)
            if not step.send_count:  # no frontier node had anyone left to tell
                break
        states = step.states
        frontier = step.newly_informed
        informed += step.first_deliveries
        logs.append(RoundLog(rnd, step.send_count, len(step.newly_informed), step.duplicates,
                             step.dropped, informed, step.active_count, run_id))
        totals[0] += step.send_count
        totals[1] += step.duplicates
        totals[2] += step.dropped
        if record_sends:
            sends.extend(step.sends)
        if convergence_round is None and informed == alive:
            convergence_round = rnd

    summary = RunSummary(
        config=config,
        converged=informed == alive,
        convergence_round=convergence_round,
        coverage=informed / alive,
        residue=(alive - informed) / alive,
        total_sends=totals[0],
        total_duplicates=totals[1],
        total_dropped=totals[2],
        rounds_executed=len(logs) - 1,
        informed=informed,
        alive=alive,
        run_id=run_id,
    )
    return Trace(summary, logs, sends, states, message)


def run(config: SimConfig) -> tuple[RunSummary, list[RoundLog]]:
    trace = simulate(config)
    return trace.summary, trace.logs


@dataclass
class SweepCell:
    """One (override, seed) cell of a sweep; ``error`` is set when the
    derived config was invalid and the cell did not run."""

    run_id: int
    override_index: int
    seed_index: int
    config: Optional[SimConfig]
    summary: Optional[RunSummary] = None
    logs: list[RoundLog] = field(default_factory=list)
    error: Optional[str] = None


def _run_cell(cell: SweepCell) -> SweepCell:
    if cell.error is None:
        trace = simulate(cell.config, run_id=cell.run_id)
        cell.summary, cell.logs = trace.summary, trace.logs
    return cell


def run_sweep(
    base: SimConfig,
    seeds: Sequence[int],
    overrides: Sequence[Mapping[str, Any]] = ({},),
    *,
    workers: int = 1,
) -> list[SweepCell]:
    """Run every override applied to ``base`` under every seed.

    Cells come back ordered by (override index, seed index) whatever
    ``workers`` is. Invalid derived configs yield cells carrying the
    error message; the rest of the sweep still runs.
    """
    cells = []
    for oi, override in enumerate(overrides):
        for si, seed in enumerate(seeds):
            run_id = len(cells)
            try:
                config = base.with_changes(**override, seed=seed).validate()
            except (ConfigError, TypeError, ValueError) as exc:
                cells.append(SweepCell(run_id, oi, si, None, error=str(exc)))
                continue
            cells.append(SweepCell(run_id, oi, si, config))
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        cells = [_run_cell(c) for c in cells]
    return cells
