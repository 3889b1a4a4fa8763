import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecast.core import GossipStyle, Prng, SimConfig
from treecast.engine import simulate
from treecast.protocols import (
    UNINFORMED,
    GossipParams,
    NodeState,
    Send,
    cluster_step,
    gossip_step,
    origin_state,
    tree_step,
)
from treecast.topology import (
    Overlay,
    OverlayKind,
    build_binary_tree,
    build_clustered_tree,
    build_contact_graph,
)

MSG = 1


def hand_contacts(*lists):
    return Overlay(OverlayKind.CONTACT_GRAPH, len(lists), tuple(tuple(sorted(nb)) for nb in lists))


def fresh(n, origin=0, spreading=True):
    states = [UNINFORMED] * n
    states[origin] = origin_state(MSG, spreading)
    return states


def newly_per_round(logs):
    counts = [1]
    for prev, cur in zip(logs, logs[1:]):
        counts.append(cur.cumulative_informed - prev.cumulative_informed)
    return counts


# -- gossip -------------------------------------------------------------------


def test_gossip_two_nodes_push():
    overlay = build_contact_graph(2, 1, Prng(0))
    step = gossip_step(overlay, fresh(2), 1, GossipParams(), Prng(0), message=MSG)
    assert step.sends == [Send(0, 1, 1, MSG)]
    assert all(s.informed for s in step.states)
    assert step.states[1].first_sender == 0
    assert step.states[1].informed_round == 1


def test_gossip_two_nodes_pull():
    overlay = build_contact_graph(2, 1, Prng(0))
    params = GossipParams(style=GossipStyle.PULL)
    step = gossip_step(overlay, fresh(2), 1, params, Prng(0), message=MSG)
    assert step.sends == [Send(0, 1, 1, MSG)]
    assert step.states[1].informed


def test_gossip_pull_from_uninformed_contact_sends_nothing():
    overlay = hand_contacts({1}, {2}, {0})
    params = GossipParams(style=GossipStyle.PULL)
    step = gossip_step(overlay, fresh(3), 1, params, Prng(0), message=MSG)
    # Node 1 asks node 2 (uninformed); node 2 asks node 0 and gets an answer.
    assert step.sends == [Send(0, 2, 1, MSG)]


def test_gossip_push_pull_combines_both():
    overlay = hand_contacts({1}, {2}, {0})
    params = GossipParams(style=GossipStyle.PUSH_PULL)
    step = gossip_step(overlay, fresh(3), 1, params, Prng(0), message=MSG)
    assert step.sends == [Send(0, 1, 1, MSG), Send(0, 2, 1, MSG)]
    assert step.first_deliveries == 2


def test_gossip_rejects_tree_overlay():
    with pytest.raises(ValueError):
        gossip_step(build_binary_tree(3), fresh(3), 1, GossipParams(), Prng(0), message=MSG)


def test_gossip_k1_feedback_and_duplicate_deactivate():
    overlay = hand_contacts({1}, {0})
    states = [origin_state(MSG, True), NodeState(True, True, 0, frozenset({MSG}), 1)]
    step = gossip_step(overlay, states, 2, GossipParams(k=1), Prng(0), message=MSG)
    assert len(step.sends) == 2
    assert step.duplicates == 2
    assert not step.states[0].active and not step.states[1].active
    assert step.active_count == 0


def test_gossip_without_decay_stays_active():
    overlay = hand_contacts({1}, {0})
    states = [origin_state(MSG, True), NodeState(True, True, 0, frozenset({MSG}), 1)]
    step = gossip_step(overlay, states, 2, GossipParams(k=None), Prng(0), message=MSG)
    assert step.states[0].active and step.states[1].active


def test_gossip_decay_rate_is_one_over_k():
    overlay = hand_contacts({1}, {0})
    states = [origin_state(MSG, True), NodeState(True, True, 0, frozenset({MSG}), 1)]
    trials, k = 4000, 4
    stopped = 0
    for seed in range(trials):
        step = gossip_step(overlay, states, 2, GossipParams(k=k), Prng(seed), message=MSG)
        stopped += not step.states[0].active
    # Node 0 has two events (feedback and duplicate): 1 - (3/4)^2 = 0.4375.
    p = 1 - (1 - 1 / k) ** 2
    sigma = (p * (1 - p) / trials) ** 0.5
    assert abs(stopped / trials - p) < 4 * sigma


def test_gossip_failed_contact_drops_without_feedback():
    overlay = hand_contacts({1}, {0}, {0})
    step = gossip_step(overlay, fresh(3), 1, GossipParams(k=1), Prng(0), message=MSG, failed={1})
    assert step.sends == [Send(0, 1, 1, MSG)]
    assert step.dropped == 1
    assert step.states[0].active


def test_gossip_order_independent_of_processing():
    # Per-node streams: changing one node's state leaves another's choices alone.
    overlay = build_contact_graph(50, 5, Prng(3))
    a = fresh(50)
    b = fresh(50)
    b[7] = NodeState(True, True, 0, frozenset({MSG}), 0)
    sa = gossip_step(overlay, a, 4, GossipParams(), Prng(9), message=MSG)
    sb = gossip_step(overlay, b, 4, GossipParams(), Prng(9), message=MSG)
    assert [s for s in sb.sends if s.src == 0] == [s for s in sa.sends if s.src == 0]


def test_gossip_ideal_doubling():
    # Large network, few informed: no collisions yet, so each round doubles.
    for seed in (0, 1, 3):
        trace = simulate(SimConfig(mode="gossip", n=4096, contacts=32, seed=seed, max_rounds=4))
        assert [r.cumulative_informed for r in trace.logs] == [1, 2, 4, 8, 16]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), fanout=st.integers(1, 3))
def test_gossip_push_growth_never_exceeds_fanout_bound(seed, fanout):
    trace = simulate(SimConfig(mode="gossip", n=300, contacts=8, fanout=fanout, seed=seed, max_rounds=12))
    for r in trace.logs:
        assert r.cumulative_informed <= (fanout + 1) ** r.round


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    style=st.sampled_from(list(GossipStyle)),
    k=st.sampled_from([None, 1, 2, 5]),
    n=st.integers(2, 80),
    failed_count=st.integers(0, 5),
)
def test_gossip_state_invariants(seed, style, k, n, failed_count):
    contacts = min(4, n - 1)
    failed = set(range(max(1, n - failed_count), n))
    trace = simulate(SimConfig(
        mode="gossip", n=n, contacts=contacts, gossip_style=style, k=k, seed=seed,
        failed=failed, max_rounds=40,
    ), record_sends=True)
    informed = [r.cumulative_informed for r in trace.logs]
    assert informed == sorted(informed)
    for v, s in enumerate(trace.states):
        assert s.informed == (trace.message in s.seen)
        assert not s.active or s.informed
        assert (s.first_sender is None) == (v == 0 or not s.informed)
        if v in failed:
            assert not s.informed
    assert not any(s.src in failed for s in trace.sends)
    for r in trace.logs:
        assert r.sends == r.first_deliveries + r.duplicate_receptions + r.dropped


# -- tree ---------------------------------------------------------------------


def test_tree_growth_from_root():
    trace = simulate(SimConfig(mode="tree", n=15), record_sends=True)
    assert newly_per_round(trace.logs) == [1, 2, 4, 8]
    assert trace.summary.total_sends == 14
    assert trace.summary.total_duplicates == 0
    assert all(s.src < s.dst for s in trace.sends)  # downward only


def test_tree_origin_leaf_matches_bfs():
    trace = simulate(SimConfig(mode="tree", n=15, origin=7))
    tree = build_binary_tree(15)
    g = nx.Graph(tree.edges())
    dist = nx.single_source_shortest_path_length(g, 7)
    # Leaf 7 (depth 3) to the far leaves 11-14 (depth 3) is 6 hops.
    assert trace.summary.convergence_round == max(dist.values()) == 6
    per_round = [sum(1 for d in dist.values() if d == r) for r in range(7)]
    assert newly_per_round(trace.logs) == per_round


def test_tree_step_skips_incoming_link():
    tree = build_binary_tree(7)
    states = fresh(7, origin=3, spreading=False)
    first = tree_step(tree, states, 1, message=MSG)
    assert first.sends == [Send(3, 1, 1, MSG)]
    second = tree_step(tree, first.states, 2, message=MSG)
    assert second.sends == [Send(1, 0, 2, MSG), Send(1, 4, 2, MSG)]


def test_tree_step_rejects_cluster_overlay():
    with pytest.raises(ValueError):
        tree_step(build_clustered_tree(9, 3), fresh(9, spreading=False), 1, message=MSG)


# -- cluster ------------------------------------------------------------------


def test_cluster_single_group_walkthrough():
    trace = simulate(SimConfig(mode="tree_cluster", n=3, group_size=3), record_sends=True)
    assert trace.sends == [Send(0, 1, 1, MSG), Send(0, 2, 1, MSG), Send(1, 2, 2, MSG), Send(2, 1, 2, MSG)]
    assert trace.summary.convergence_round == 1
    assert trace.logs[2].duplicate_receptions == 2
    assert trace.logs[2].first_deliveries == 0


def test_cluster_nine_nodes_counts():
    trace = simulate(SimConfig(mode="tree_cluster", n=9, group_size=3), record_sends=True)
    edges = build_clustered_tree(9, 3).edge_count()
    assert trace.summary.total_sends == 2 * edges - 8 == 46
    assert trace.summary.total_duplicates == 46 - 8 == 38
    # Direct count: every informed node forwards once to all neighbours but its first sender.
    senders = {}
    for s in trace.sends:
        senders.setdefault(s.src, set()).add(s.dst)
    assert set(senders) == set(range(9))
    assert len({s.src for s in trace.sends}) == 9


def test_cluster_first_sender_is_lowest():
    cluster = build_clustered_tree(9, 3)
    step = cluster_step(cluster, fresh(9, spreading=False), 1, message=MSG)
    second = cluster_step(cluster, step.states, 2, message=MSG)
    # Group 2 members (6, 7, 8) hear first from node 0 in round 1 already.
    assert all(step.states[v].first_sender == 0 for v in range(1, 9))
    assert second.first_deliveries == 0


def test_cluster_single_failure_full_coverage():
    for f in range(1, 21):
        s = simulate(SimConfig(mode="tree_cluster", n=21, group_size=3, failed={f})).summary
        assert s.coverage == 1.0, f


def test_cluster_group_size_one_equals_tree():
    for n in (1, 2, 7, 15, 31):
        a = simulate(SimConfig(mode="tree", n=n, origin=n // 2), record_sends=True)
        b = simulate(SimConfig(mode="tree_cluster", n=n, group_size=1, origin=n // 2), record_sends=True)
        assert a.sends == b.sends
