"""Overlay builders: random contact graph, binary tree, clustered tree."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Collection, Iterable, Optional, TextIO

from .core import TOPOLOGY_STREAM, NodeId, Prng, choose_distinct


class OverlayKind(str, enum.Enum):
    CONTACT_GRAPH = "contact_graph"
    BINARY_TREE = "binary_tree"
    CLUSTERED_TREE = "clustered_tree"


@dataclass(frozen=True)
class Overlay:
    """Immutable adjacency plus the tree/group metadata of its kind.

    ``neighbors[v]`` is sorted ascending. For a contact graph it is v's
    outgoing contact list; for the tree kinds adjacency is symmetric.

    Tree metadata: ``depth`` is per node (for a clustered tree, the depth of
    the node's group); ``parent``/``children`` are per node for a binary
    tree and per group (``group_parent``/``group_children``) for a
    clustered tree.
    """

    kind: OverlayKind
    n: int
    neighbors: tuple[tuple[NodeId, ...], ...]
    depth: Optional[tuple[int, ...]] = None
    parent: Optional[tuple[Optional[NodeId], ...]] = None
    children: Optional[tuple[tuple[NodeId, ...], ...]] = None
    group_size: Optional[int] = None
    group_of: Optional[tuple[int, ...]] = None
    members: Optional[tuple[tuple[NodeId, ...], ...]] = None
    group_parent: Optional[tuple[Optional[int], ...]] = None
    group_children: Optional[tuple[tuple[int, ...], ...]] = None
    weakly_connected: bool = True

    @property
    def height(self) -> int:
        """Max depth in edges (of the group tree, for a clustered tree)."""
        if self.depth is None:
            raise ValueError(f"{self.kind.value} overlay has no height")
        return max(self.depth)

    @property
    def is_symmetric(self) -> bool:
        return self.kind is not OverlayKind.CONTACT_GRAPH

    def edges(self) -> list[tuple[NodeId, NodeId]]:
        """Undirected edges ``u < v`` for trees; directed arcs for contact graphs."""
        if self.is_symmetric:
            return [(u, v) for u in range(self.n) for v in self.neighbors[u] if u < v]
        return [(u, v) for u in range(self.n) for v in self.neighbors[u]]

    def edge_count(self) -> int:
        total = sum(len(nb) for nb in self.neighbors)
        return total // 2 if self.is_symmetric else total

    def subtree(self, root: NodeId) -> list[NodeId]:
        """Nodes in the binary-tree subtree rooted at ``root`` (inclusive)."""
        if self.children is None:
            raise ValueError("subtree is defined for binary trees only")
        out, stack = [], [root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.children[v])
        return sorted(out)


def _level_order(count: int):
    parent = tuple(None if i == 0 else (i - 1) // 2 for i in range(count))
    children = tuple(tuple(c for c in (2 * i + 1, 2 * i + 2) if c < count) for i in range(count))
    depth = tuple((i + 1).bit_length() - 1 for i in range(count))
    return parent, children, depth


def build_binary_tree(n: int) -> Overlay:
    """Complete binary tree in level order: node i joins under (i - 1) // 2."""
    if n < 1:
        raise ValueError(f"binary tree needs n >= 1, got {n}")
    parent, children, depth = _level_order(n)
    neighbors = tuple(
        tuple(sorted(([] if parent[i] is None else [parent[i]]) + list(children[i])))
        for i in range(n)
    )
    return Overlay(
        kind=OverlayKind.BINARY_TREE,
        n=n,
        neighbors=neighbors,
        depth=depth,
        parent=parent,
        children=children,
    )


def build_clustered_tree(n: int, group_size: int) -> Overlay:
    """Binary tree of fully meshed groups, adjacent groups joined bipartitely.

    Node i belongs to group i // group_size. With group_size 1 the result has
    exactly the adjacency of ``build_binary_tree(n)``.
    """
    if group_size < 1:
        raise ValueError(f"group_size must be >= 1, got {group_size}")
    if n < group_size or n % group_size:
        raise ValueError(f"n = {n} must be a positive multiple of group_size = {group_size}")
    g = group_size
    groups = n // g
    gparent, gchildren, gdepth = _level_order(groups)
    members = tuple(tuple(range(i * g, (i + 1) * g)) for i in range(groups))
    group_of = tuple(v // g for v in range(n))
    neighbors = []
    for v in range(n):
        grp = group_of[v]
        adjacent = [grp] + list(gchildren[grp])
        if gparent[grp] is not None:
            adjacent.append(gparent[grp])
        nb = sorted(u for a in adjacent for u in members[a] if u != v)
        neighbors.append(tuple(nb))
    return Overlay(
        kind=OverlayKind.CLUSTERED_TREE,
        n=n,
        neighbors=tuple(neighbors),
        depth=tuple(gdepth[group_of[v]] for v in range(n)),
        group_size=g,
        group_of=group_of,
        members=members,
        group_parent=gparent,
        group_children=gchildren,
    )


def build_contact_graph(n: int, contacts: int, prng: Prng) -> Overlay:
    """Directed random contact lists, ``contacts`` distinct peers per node.

    Node v draws its list from ``prng.split(TOPOLOGY_STREAM, v)``, so the
    lists do not depend on construction order. When ``contacts == n - 1``
    every list is simply all other nodes and no draws are made.

    Weak connectivity of the result is recorded in ``weakly_connected``;
    a disconnected draw is returned as is.
    """
    if not 1 <= contacts <= n - 1:
        raise ValueError(f"contacts must satisfy 1 <= contacts <= n - 1, got {contacts} for n = {n}")
    neighbors = []
    for v in range(n):
        if contacts == n - 1:
            nb = [*range(v), *range(v + 1, n)]
        else:
            picks = choose_distinct(prng.split(TOPOLOGY_STREAM, v), n - 1, contacts)
            nb = sorted(x + 1 if x >= v else x for x in picks)
        neighbors.append(tuple(nb))
    neighbors = tuple(neighbors)
    return Overlay(
        kind=OverlayKind.CONTACT_GRAPH,
        n=n,
        neighbors=neighbors,
        weakly_connected=contacts == n - 1 or _weakly_connected(n, neighbors),
    )


def _weakly_connected(n: int, neighbors: tuple[tuple[int, ...], ...]) -> bool:
    reverse: list[list[int]] = [[] for _ in range(n)]
    for u, nb in enumerate(neighbors):
        for v in nb:
            reverse[v].append(u)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for adj in (neighbors[u], reverse[u]):
            for v in adj:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
    return count == n


def distances_from(overlay: Overlay, source: NodeId, failed: Collection[NodeId] = ()) -> dict[NodeId, int]:
    """BFS hop counts from ``source`` to every reachable node, avoiding ``failed``.

    Contact graphs are traversed along their directed arcs.
    """
    if source in failed:
        return {}
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in overlay.neighbors[u]:
            if v not in dist and v not in failed:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def hop_distance(overlay: Overlay, u: NodeId, v: NodeId, failed: Collection[NodeId] = ()) -> Optional[int]:
    """Shortest path length in hops, or ``None`` when ``v`` is unreachable."""
    for node in (u, v):
        if not 0 <= node < overlay.n:
            raise ValueError(f"node {node} not in overlay of {overlay.n} nodes")
    return distances_from(overlay, u, failed).get(v)


def eccentricity(overlay: Overlay, u: NodeId, failed: Collection[NodeId] = ()) -> int:
    """Largest hop distance from ``u`` to a node it can reach."""
    return max(distances_from(overlay, u, failed).values())


def to_edge_list(overlay: Overlay) -> str:
    header = f"# {overlay.kind.value} {overlay.n}"
    if overlay.group_size is not None:
        header += f" {overlay.group_size}"
    lines = [header] + [f"{u} {v}" for u, v in overlay.edges()]
    return "\n".join(lines) + "\n"


def write_edge_list(overlay: Overlay, out: TextIO) -> None:
    out.write(to_edge_list(overlay))


@dataclass(frozen=True)
class EdgeList:
    kind: OverlayKind
    n: int
    group_size: Optional[int]
    edges: tuple[tuple[int, int], ...]


def parse_edge_list(lines: Iterable[str]) -> EdgeList:
    """Inverse of :func:`to_edge_list`."""
    it = iter(lines)
    header = next(it, "").split()
    if len(header) not in (3, 4) or header[0] != "#":
        raise ValueError(f"bad edge-list header: {' '.join(header)!r}")
    kind = OverlayKind(header[1])
    n = int(header[2])
    group_size = int(header[3]) if len(header) == 4 else None
    edges = []
    for lineno, line in enumerate(it, start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line.rstrip()!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return EdgeList(kind, n, group_size, tuple(edges))
