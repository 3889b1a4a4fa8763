"""Per-round protocol behavior as step functions over node state.

A step reads the round-start states, emits the round's sends and returns
the states after every delivery of the round has been applied. Sends are
ordered by (sender, recipient).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, NamedTuple, Optional, Sequence

from .core import GossipStyle, MessageId, NodeId, Prng, choose_distinct
from .topology import Overlay, OverlayKind

# Sub-stream keys, combined with the round number when splitting the run PRNG.
SELECT_STREAM = 0
DECAY_STREAM = 1


class NodeState(NamedTuple):
    informed: bool = False
    active: bool = False
    first_sender: Optional[NodeId] = None
    seen: frozenset = frozenset()
    informed_round: Optional[int] = None


UNINFORMED = NodeState()
_tuple_new = tuple.__new__  # bypasses NamedTuple.__new__ on the hot paths


def origin_state(message: MessageId, spreading: bool) -> NodeState:
    return NodeState(True, spreading, None, frozenset((message,)), 0)


class Send(NamedTuple):
    src: NodeId
    dst: NodeId
    round: int
    message: MessageId


@dataclass(frozen=True)
class GossipParams:
    fanout: int = 1
    style: GossipStyle = GossipStyle.PUSH
    k: Optional[int] = None  # None: never lose interest


class StepResult:
    """Outcome of one round. ``sends`` is materialized on first access."""

    __slots__ = ("_sends", "_batches", "_round", "_message", "send_count",
                 "states", "newly_informed", "duplicates", "dropped", "active_count")

    def __init__(self, sends, states, newly_informed, duplicates, dropped, active_count=0,
                 *, batches=None, send_count=0, round=0, message=0):
        self._sends = sends
        self._batches = batches  # (neighbors, [(src, skipped neighbor), ...]) when sends is None
        self._round = round
        self._message = message
        self.send_count = len(sends) if sends is not None else send_count
        self.states = states
        self.newly_informed = newly_informed
        self.duplicates = duplicates
        self.dropped = dropped
        self.active_count = active_count

    @property
    def sends(self) -> list[Send]:
        if self._sends is None:
            r, m = self._round, self._message
            nbrs, senders = self._batches
            self._sends = [Send(v, u, r, m) for v, skip in senders for u in nbrs[v] if u != skip]
        return self._sends

    @property
    def first_deliveries(self) -> int:
        return len(self.newly_informed)


def _deliver(states, sends, round, message, failed, spreading):
    """Apply deliveries. The lowest sender wins a node's first delivery."""
    first: dict[NodeId, NodeId] = {}
    dup_events: dict[NodeId, int] = {}
    dropped = 0
    for src, dst, _, _ in sends:
        if dst in failed:
            dropped += 1
        elif dst in first or states[dst].informed:
            dup_events[dst] = dup_events.get(dst, 0) + 1
        else:
            first[dst] = src
    new_states = list(states)
    seen = frozenset((message,))
    for dst, src in first.items():
        old = states[dst].seen
        new_states[dst] = _tuple_new(NodeState, (True, spreading, src, old | seen if old else seen, round))
    return new_states, sorted(first), dup_events, dropped


def _check_kind(overlay: Overlay, kind: OverlayKind, step: str) -> None:
    if overlay.kind is not kind:
        raise ValueError(f"{step} needs a {kind.value} overlay, got {overlay.kind.value}")


def gossip_step(
    overlay: Overlay,
    states: Sequence[NodeState],
    round: int,
    params: GossipParams,
    prng: Prng,
    *,
    message: MessageId,
    failed: Collection[NodeId] = frozenset(),
) -> StepResult:
    """One synchronous gossip round.

    Push: each alive active node sends to ``fanout`` distinct contacts.
    Pull: each alive uninformed node asks ``fanout`` distinct contacts, and
    every alive contact that was informed at round start answers with one
    send. Node v draws its selections from ``prng.split(round,
    SELECT_STREAM).split(v)``.

    Decay, when ``params.k`` is set: a push that lands on a node informed at
    round start is a feedback event for the sender, and every duplicate copy
    is an event for its recipient. Each event deactivates an active node
    with probability 1/k, drawn from the node's decay stream. Pull answers
    cost the responder nothing.
    """
    _check_kind(overlay, OverlayKind.CONTACT_GRAPH, "gossip_step")
    n = overlay.n
    nbrs = overlay.neighbors
    fanout = params.fanout
    push = params.style in (GossipStyle.PUSH, GossipStyle.PUSH_PULL)
    pull = params.style in (GossipStyle.PULL, GossipStyle.PUSH_PULL)
    select = prng.split(round, SELECT_STREAM)

    sends: list[Send] = []
    feedback: dict[NodeId, int] = {}
    for v in range(n):
        s = states[v]
        if v in failed:
            continue
        if s.informed:
            if not (push and s.active):
                continue
            contacts = nbrs[v]
            rng = select.split(v)
            if fanout == 1:  # same single draw choose_distinct would make
                targets = [contacts[rng.below(len(contacts))]]
            else:
                targets = sorted(contacts[i] for i in choose_distinct(rng, len(contacts), fanout))
            for t in targets:
                sends.append(Send(v, t, round, message))
                if states[t].informed and t not in failed:
                    feedback[v] = feedback.get(v, 0) + 1
        elif pull:
            contacts = nbrs[v]
            rng = select.split(v)
            for i in choose_distinct(rng, len(contacts), fanout):
                t = contacts[i]
                if states[t].informed and t not in failed:
                    sends.append(Send(t, v, round, message))
    if pull:
        sends.sort()

    new_states, newly, dup_events, dropped = _deliver(states, sends, round, message, failed, True)

    if params.k is not None and (feedback or dup_events):
        k = params.k
        decay = prng.split(round, DECAY_STREAM)
        for v in sorted(feedback.keys() | dup_events.keys()):
            if not new_states[v].active:
                continue
            rng = decay.split(v)
            for _ in range(feedback.get(v, 0) + dup_events.get(v, 0)):
                if rng.below(k) == 0:
                    new_states[v] = new_states[v]._replace(active=False)
                    break

    active = sum(1 for v in range(n) if new_states[v].active and v not in failed)
    return StepResult(sends, new_states, newly, sum(dup_events.values()), dropped, active)


def flood_step(
    overlay: Overlay,
    states: Sequence[NodeState],
    round: int,
    *,
    message: MessageId,
    failed: Collection[NodeId] = frozenset(),
    frontier: Optional[Sequence[NodeId]] = None,
) -> StepResult:
    """Nodes first informed in the previous round forward to every neighbor
    except the one that delivered their first copy.

    ``frontier`` lists those nodes when the caller already knows them;
    otherwise the states are scanned.
    """
    if frontier is None:
        frontier = [v for v, s in enumerate(states) if s.informed_round == round - 1]
    nbrs = overlay.neighbors
    new_states = list(states)
    seen = frozenset((message,))
    batches = []
    newly: list[NodeId] = []
    count = duplicates = dropped = 0
    # Senders go in ascending order, so the first write to a node is from
    # its lowest sender.
    for v in sorted(frontier):
        if v in failed:
            continue
        skip = states[v].first_sender
        sent = 0
        for u in nbrs[v]:
            if u == skip:
                continue
            sent += 1
            target = new_states[u]
            if target.informed:
                duplicates += 1
            elif failed and u in failed:
                dropped += 1
            else:
                old = target.seen
                new_states[u] = _tuple_new(NodeState, (True, False, v, old | seen if old else seen, round))
                newly.append(u)
        if sent:
            batches.append((v, skip))
            count += sent
    newly.sort()
    return StepResult(None, new_states, newly, duplicates, dropped,
                      batches=(nbrs, batches), send_count=count, round=round, message=message)


def tree_step(overlay, states, round, *, message, failed=frozenset(), frontier=None) -> StepResult:
    """Tree broadcast: forward to parent and children except the incoming link."""
    _check_kind(overlay, OverlayKind.BINARY_TREE, "tree_step")
    return flood_step(overlay, states, round, message=message, failed=failed, frontier=frontier)


def cluster_step(overlay, states, round, *, message, failed=frozenset(), frontier=None) -> StepResult:
    """Clustered-tree broadcast: forward to buddies and adjacent groups.

    A node forwards only in the round after its first receipt, so later
    copies are counted as duplicates and go no further.
    """
    _check_kind(overlay, OverlayKind.CLUSTERED_TREE, "cluster_step")
    return flood_step(overlay, states, round, message=message, failed=failed, frontier=frontier)
