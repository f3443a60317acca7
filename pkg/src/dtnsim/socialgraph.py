"""Aggregated familiar-contact graph, clique-percolation communities, and
cumulative-window centralities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .contacts import ContactEvent


@dataclass(frozen=True)
class FamiliarGraph:
    """Undirected graph whose edges mark pairs with enough cumulative contact."""

    adjacency: dict[int, frozenset[int]]

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adjacency)

    def neighbors(self, node: int) -> frozenset[int]:
        return self.adjacency.get(node, frozenset())

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency.get(a, frozenset())

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(
            (a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b
        )


def build_familiar_graph(
    pair_durations: Mapping[tuple[int, int], float], threshold: float
) -> FamiliarGraph:
    """Keep an edge for every pair whose cumulative contact time reaches the
    familiarity threshold."""
    adj: dict[int, set[int]] = {}
    for (a, b), seconds in pair_durations.items():
        if a == b:
            raise ValueError(f"self-pair for node {a}")
        if seconds < 0:
            raise ValueError("durations must be >= 0")
        adj.setdefault(a, set())
        adj.setdefault(b, set())
        if seconds >= threshold:
            adj[a].add(b)
            adj[b].add(a)
    return FamiliarGraph({n: frozenset(s) for n, s in adj.items()})


@dataclass(frozen=True)
class CommunityMap:
    """Overlapping communities plus a node -> community-index lookup."""

    communities: tuple[frozenset[int], ...]
    _membership: dict[int, frozenset[int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        membership: dict[int, set[int]] = {}
        for idx, community in enumerate(self.communities):
            for node in community:
                membership.setdefault(node, set()).add(idx)
        object.__setattr__(
            self, "_membership", {n: frozenset(s) for n, s in membership.items()}
        )

    @classmethod
    def empty(cls) -> "CommunityMap":
        return cls(())

    def communities_of(self, node: int) -> frozenset[int]:
        return self._membership.get(node, frozenset())

    def shares_community(self, a: int, b: int) -> bool:
        """Any-of membership test: do the two nodes co-occur in some community?"""
        return bool(self.communities_of(a) & self.communities_of(b))


def _percolate(cliques: Sequence[frozenset[int]], k: int) -> list[frozenset[int]]:
    # Union-find over maximal cliques; two are in one community when they
    # share at least k-1 nodes (equivalent to percolation over all k-cliques).
    parent = list(range(len(cliques)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(len(cliques)):
        for j in range(i + 1, len(cliques)):
            if len(cliques[i] & cliques[j]) >= k - 1:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups: dict[int, set[int]] = {}
    for i, clique in enumerate(cliques):
        groups.setdefault(find(i), set()).update(clique)
    return [frozenset(g) for g in groups.values()]


def k_clique_communities(graph: FamiliarGraph, k: int) -> CommunityMap:
    """Communities as unions of k-cliques reachable through k-1 shared nodes."""
    if k < 3:
        raise ValueError("k must be >= 3")
    g = nx.Graph()
    g.add_nodes_from(graph.adjacency)
    g.add_edges_from(graph.edges)
    cliques = [frozenset(c) for c in nx.find_cliques(g) if len(c) >= k]
    communities = _percolate(cliques, k)
    communities.sort(key=lambda c: tuple(sorted(c)))
    return CommunityMap(tuple(communities))


@dataclass(frozen=True)
class CentralityTable:
    """Per-node popularity from averaging unique encounters per time window."""

    global_centrality: dict[int, float]
    local_centrality: dict[tuple[int, int], float]  # (node, community index)
    window: float
    num_windows: int

    def global_of(self, node: int) -> float:
        return self.global_centrality.get(node, 0.0)

    def local_of(self, node: int, community_index: int) -> float:
        return self.local_centrality.get((node, community_index), 0.0)

    @classmethod
    def empty(cls, window: float = 1.0) -> "CentralityTable":
        return cls({}, {}, window, 0)


def cumulative_window_centrality(
    contacts: Iterable[ContactEvent],
    window: float,
    communities: CommunityMap,
    *,
    now: float,
    epoch: float = 0.0,
) -> CentralityTable:
    """Average the number of unique nodes met per window over all elapsed windows.

    A contact overlapping several windows counts its peer in each of them.
    Local centrality counts only peers sharing the given community, computed
    for every (member node, community) pair.
    """
    if window <= 0:
        raise ValueError("window must be > 0")
    elapsed = now - epoch
    num_windows = max(1, math.ceil(elapsed / window)) if elapsed > 0 else 1

    met: dict[tuple[int, int], set[int]] = {}  # (node, window index) -> peers
    for ev in contacts:
        first = int((ev.start - epoch) // window)
        last = int((ev.end - epoch) // window)
        if (ev.end - epoch) % window == 0:  # end is exclusive
            last -= 1
        last = min(last, num_windows - 1)
        for w in range(max(first, 0), last + 1):
            met.setdefault((ev.node_a, w), set()).add(ev.node_b)
            met.setdefault((ev.node_b, w), set()).add(ev.node_a)

    global_sum: dict[int, int] = {}
    local_sum: dict[tuple[int, int], int] = {}
    for (node, _w), peers in met.items():
        global_sum[node] = global_sum.get(node, 0) + len(peers)
        for cidx in communities.communities_of(node):
            members = communities.communities[cidx]
            n_local = len(peers & members)
            if n_local:
                key = (node, cidx)
                local_sum[key] = local_sum.get(key, 0) + n_local

    return CentralityTable(
        global_centrality={n: s / num_windows for n, s in global_sum.items()},
        local_centrality={k: s / num_windows for k, s in local_sum.items()},
        window=window,
        num_windows=num_windows,
    )


def communities_json(communities: CommunityMap) -> str:
    """Community dump: a JSON array of sorted node-id arrays."""
    return json.dumps([sorted(c) for c in communities.communities]) + "\n"


def centrality_csv(table: CentralityTable, communities: CommunityMap, node_count: int) -> str:
    """Centrality dump: one row per node, one local column per community."""
    header = ["node", "global"] + [f"local:{i}" for i in range(len(communities.communities))]
    lines = [",".join(header)]
    for node in range(node_count):
        cols = [str(node), repr(table.global_of(node))]
        cols += [
            repr(table.local_of(node, i)) for i in range(len(communities.communities))
        ]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"
