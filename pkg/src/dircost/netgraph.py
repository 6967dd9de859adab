"""Network model and exact minimum Steiner trees.

Each packet P_{i,K} (source i, sink subset K) is routed over a minimum
Steiner tree spanning the source node and the nodes of the sinks in K; its
weight is the per-bit cost coefficient of the rate R_{i,K}.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class Node:
    id: str
    kind: str = "intermediate"  # "source" | "sink" | "intermediate"
    index: int | None = None

    def __post_init__(self):
        if self.kind not in ("source", "sink", "intermediate"):
            raise ValueError(f"node {self.id!r}: unknown kind {self.kind!r}")
        if (self.kind == "intermediate") != (self.index is None):
            raise ValueError(f"node {self.id!r}: sources and sinks need an index, others none")


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    weight: float


class Network:
    """Undirected, connected, nonnegatively weighted graph with typed nodes."""

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge]):
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        self._pos = {nid: k for k, nid in enumerate(ids)}
        self.source_nodes: dict[int, str] = {}
        self.sink_nodes: dict[int, str] = {}
        for n in self.nodes:
            table = {"source": self.source_nodes, "sink": self.sink_nodes}.get(n.kind)
            if table is not None:
                if n.index in table:
                    raise ValueError(f"{n.kind} index {n.index} appears on two nodes")
                table[n.index] = n.id
        for e in self.edges:
            if e.u not in self._pos or e.v not in self._pos:
                raise ValueError(f"edge ({e.u}, {e.v}) references an unknown node")
            if not (e.weight >= 0 and np.isfinite(e.weight)):
                raise ValueError(f"edge ({e.u}, {e.v}) has invalid weight {e.weight!r}")
        self._dist = _all_pairs(len(self.nodes), [(self._pos[e.u], self._pos[e.v], float(e.weight)) for e in self.edges])
        if np.isinf(self._dist).any():
            raise ValueError("network graph is not connected")

    @property
    def sources(self) -> list[int]:
        return sorted(self.source_nodes)

    @property
    def sinks(self) -> list[int]:
        return sorted(self.sink_nodes)

    def position(self, node_id: str) -> int:
        return self._pos[node_id]

    def distance(self, a: str, b: str) -> float:
        return float(self._dist[self._pos[a], self._pos[b]])

    @property
    def distances(self) -> np.ndarray:
        return self._dist


def _all_pairs(n: int, edges) -> np.ndarray:
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for u, v, w in edges:
        if w < d[u, v]:
            d[u, v] = d[v, u] = w
    # Floyd-Warshall
    for k in range(n):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


class DemandMap:
    """Per-sink requested sources (sigma) and the derived per-source sink sets (pi)."""

    def __init__(self, sigma: Mapping[int, Iterable[int]], sources: Iterable[int] | None = None):
        self.sigma = {int(j): frozenset(int(i) for i in srcs) for j, srcs in sigma.items()}
        for j, srcs in self.sigma.items():
            if not srcs:
                raise ValueError(f"sink {j} requests no source")
        known = set().union(*self.sigma.values())
        self.sources = sorted(set(sources) | known if sources is not None else known)
        if sources is not None and not known <= set(sources):
            raise ValueError(f"sinks request unknown sources {sorted(known - set(sources))}")
        self.sinks = sorted(self.sigma)
        self.pi = {i: frozenset(j for j, s in self.sigma.items() if i in s) for i in self.sources}

    def __repr__(self) -> str:
        body = ", ".join(f"{j}: {sorted(s)}" for j, s in sorted(self.sigma.items()))
        return f"DemandMap({{{body}}})"

    def __eq__(self, other) -> bool:
        return isinstance(other, DemandMap) and self.sigma == other.sigma and self.sources == other.sources


@dataclass(frozen=True, order=True)
class PacketId:
    """Packet from source ``source`` to the sink subset ``sinks``."""

    source: int
    sinks: tuple[int, ...]

    def __init__(self, source: int, sinks: Iterable[int]):
        s = tuple(sorted(set(int(k) for k in sinks)))
        if not s:
            raise ValueError("a packet needs at least one sink")
        object.__setattr__(self, "source", int(source))
        object.__setattr__(self, "sinks", s)

    @property
    def sink_set(self) -> frozenset:
        return frozenset(self.sinks)

    def __str__(self) -> str:
        return f"{self.source}:{'+'.join(map(str, self.sinks))}"

    @classmethod
    def parse(cls, text: str) -> "PacketId":
        """Inverse of ``str``: ``"0:1+2"`` is source 0 to sinks {1, 2}."""
        try:
            src, sinks = text.strip().split(":")
            return cls(int(src), [int(k) for k in sinks.split("+")])
        except ValueError:
            raise ValueError(f"bad packet id {text!r}, expected e.g. '0:1+2'") from None


def nonempty_subsets(items: Iterable[int]) -> list[tuple[int, ...]]:
    items = sorted(items)
    return [c for r in range(1, len(items) + 1) for c in combinations(items, r)]


def steiner_tree_weight(dist: np.ndarray, terminals: list[int]) -> float:
    """Dreyfus-Wagner over a metric closure ``dist`` (node positions as terminals)."""
    terminals = list(dict.fromkeys(terminals))
    t = len(terminals)
    if t <= 1:
        return 0.0
    if t == 2:
        return float(dist[terminals[0], terminals[1]])
    n = dist.shape[0]
    # dp[mask][v]: min tree spanning terminals in mask plus node v
    dp = np.full((1 << (t - 1), n), np.inf)
    for k in range(t - 1):
        dp[1 << k] = dist[terminals[k]]
    for mask in range(1, 1 << (t - 1)):
        if mask & (mask - 1) == 0:
            continue
        best = np.full(n, np.inf)
        sub = (mask - 1) & mask
        while sub:
            if sub < (mask ^ sub):  # each split once
                best = np.minimum(best, dp[sub] + dp[mask ^ sub])
            sub = (sub - 1) & mask
        # relax along shortest paths: dp[mask][v] = min_u best[u] + d(u, v)
        dp[mask] = np.min(best[:, None] + dist, axis=0)
    full = (1 << (t - 1)) - 1
    return float(dp[full][terminals[-1]])


def steiner_weight(net: Network, root: int, terminals: Iterable[int]) -> float:
    """Weight of a minimum tree joining source ``root`` to the given sinks."""
    terminals = sorted(set(terminals))
    if not terminals:
        raise ValueError("terminal set must be nonempty")
    if root not in net.source_nodes:
        raise KeyError(f"unknown source index {root}")
    missing = [j for j in terminals if j not in net.sink_nodes]
    if missing:
        raise KeyError(f"unknown sink indices {missing}")
    nodes = [net.position(net.sink_nodes[j]) for j in terminals] + [net.position(net.source_nodes[root])]
    return steiner_tree_weight(net.distances, nodes)


def effective_costs(net: Network, demands: DemandMap, restrict_no_helpers: bool = False) -> dict[PacketId, float]:
    """Steiner weight for every packet (i, K), K a nonempty subset of the sinks.

    With ``restrict_no_helpers`` only packets with K inside Pi_i are listed.
    """
    table = {}
    for i in demands.sources:
        ambient = demands.pi[i] if restrict_no_helpers else demands.sinks
        for K in nonempty_subsets(ambient):
            table[PacketId(i, K)] = steiner_weight(net, i, K)
    return table


def broadcast_costs(net: Network, demands: DemandMap) -> dict[int, float]:
    """Weight of the tree carrying each source's single stream to all of Pi_i."""
    return {i: steiner_weight(net, i, demands.pi[i]) for i in demands.sources if demands.pi[i]}
