"""Converged state of rank-based prefix advertisement: per-prefix shortest-path trees.

Each producer advertises its prefix with rank 0; a node that hears the
advertisement from a neighbor stores it with the neighbor's rank plus one.
Only the outcome is modeled, so every node keeps one entry per neighbor that
lies on a shortest path to the producer and prefers the lowest rank, then
the lowest next-hop id.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NoRoute
from .model import NodeId
from .node import FibEntry
from .topology import Topology, bfs_distances


@dataclass(frozen=True)
class RoutingTable:
    node_count: int
    producers: tuple[NodeId, ...]
    # entries[node][prefix] -> FibEntry list, preferred first
    entries: tuple[dict, ...]

    def fib(self, node: NodeId, prefix: NodeId) -> list[FibEntry]:
        return self.entries[node].get(prefix, [])

    def next_hop(self, node: NodeId, prefix: NodeId) -> NodeId:
        entries = self.entries[node].get(prefix)
        if not entries:
            raise NoRoute(f"node {node} has no route to prefix {prefix}")
        return entries[0].next_hop

    def rank(self, node: NodeId, prefix: NodeId) -> int:
        entries = self.entries[node].get(prefix)
        if not entries:
            raise NoRoute(f"node {node} has no route to prefix {prefix}")
        return entries[0].rank

    def prefixes_at(self, node: NodeId) -> list[NodeId]:
        return sorted(self.entries[node])

    def path(self, node: NodeId, prefix: NodeId) -> list[NodeId]:
        """Preferred forwarding path from ``node`` to the producer of ``prefix``."""
        hops = [node]
        while hops[-1] != prefix:
            hops.append(self.next_hop(hops[-1], prefix))
        return hops


def build_fibs(topology: Topology, producers) -> RoutingTable:
    producers = tuple(sorted(set(producers)))
    n = topology.node_count
    for p in producers:
        if not 0 <= p < n:
            raise ValueError(f"producer {p} is not a node")
    entries = tuple({} for _ in range(n))
    for p in producers:
        dist = bfs_distances(topology.adjacency, p)
        for v in range(n):
            if v == p or dist[v] < 0:
                continue
            fib = [FibEntry(p, u, dist[u] + 1) for u in topology.adjacency[v] if dist[u] == dist[v] - 1]
            fib.sort(key=lambda e: (e.rank, e.next_hop))
            entries[v][p] = fib
    return RoutingTable(n, producers, entries)


def distance_to_source(routing: RoutingTable, consumer: NodeId, prefix: NodeId) -> int:
    return routing.rank(consumer, prefix)


def format_fibs(routing: RoutingTable) -> str:
    lines = ["# node prefix next_hop rank"]
    for v in range(routing.node_count):
        for prefix in routing.prefixes_at(v):
            for e in routing.fib(v, prefix):
                lines.append(f"{v} {prefix} {e.next_hop} {e.rank}")
    return "\n".join(lines) + "\n"
