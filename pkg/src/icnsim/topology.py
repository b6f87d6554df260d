"""Topology construction: core/edge archetypes, random geometric, lines, edge-list files."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, Disconnected, GenerationFailed, SelfLoop, TopologyError, TopologyParseError

MAX_GEOMETRIC_RETRIES = 1000

# 50 nodes in a unit square with range 0.24, redrawn while the diameter
# exceeds 7 hops, give mean shortest paths of about 3.2 hops.
DEFAULT_RANGE = 0.24
DEFAULT_AREA = 1.0
DEFAULT_N = 50
DEFAULT_MAX_DIAMETER = 7


@dataclass(frozen=True)
class LinkParams:
    """Per-link overrides; ``None`` falls back to the run's global setting."""

    delay_ms: float | None = None
    loss: float | None = None


@dataclass(frozen=True)
class Topology:
    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    link_params: dict = field(default_factory=dict)
    kind: str = "custom"
    root: int | None = None
    consumers: tuple[int, ...] = ()
    positions: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        validate(self.node_count, self.adjacency)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.node_count) for v in self.adjacency[u] if u < v]

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]

    def link(self, u: int, v: int) -> LinkParams:
        return self.link_params.get((min(u, v), max(u, v)), _NO_OVERRIDE)

    def distances_from(self, source: int) -> list[int]:
        return bfs_distances(self.adjacency, source)

    def diameter(self) -> int:
        return max(max(self.distances_from(u)) for u in range(self.node_count))

    def mean_path_length(self) -> float:
        n = self.node_count
        total = sum(sum(self.distances_from(u)) for u in range(n))
        return total / (n * (n - 1))


_NO_OVERRIDE = LinkParams()


def bfs_distances(adjacency, source: int) -> list[int]:
    dist = [-1] * len(adjacency)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def validate(node_count: int, adjacency) -> None:
    if node_count < 1 or len(adjacency) != node_count:
        raise TopologyError(f"adjacency has {len(adjacency)} rows for {node_count} nodes")
    for u, nbrs in enumerate(adjacency):
        for v in nbrs:
            if v == u:
                raise SelfLoop(f"self-loop at node {u}")
            if not 0 <= v < node_count:
                raise TopologyError(f"edge {u}-{v} references unknown node")
            if u not in adjacency[v]:
                raise TopologyError(f"adjacency not symmetric for {u}-{v}")
    unreachable = [v for v, d in enumerate(bfs_distances(adjacency, 0)) if d < 0]
    if unreachable:
        raise Disconnected(f"nodes {unreachable[:10]} unreachable from node 0")


def from_edges(node_count: int, edges, link_params=None, **meta) -> Topology:
    nbrs = [set() for _ in range(node_count)]
    for u, v in edges:
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    adjacency = tuple(tuple(sorted(s)) for s in nbrs)
    return Topology(node_count, adjacency, dict(link_params or {}), **meta)


def gen_line(n: int) -> Topology:
    if n < 2:
        raise ConfigError("line needs n >= 2", field="n")
    return from_edges(n, [(i, i + 1) for i in range(n - 1)], kind="line", root=0,
                      consumers=(n - 1,))


def gen_core(branching_core: int, branching_leaf: int, consumers_per_leaf: int) -> Topology:
    """Producer 0, a ring of inner routers, outer routers, then leaf consumers.

    Ids are assigned level by level, so every consumer-to-producer path
    crosses exactly one depth-1 router.
    """
    for name, value in (("branching_core", branching_core), ("branching_leaf", branching_leaf),
                        ("consumers_per_leaf", consumers_per_leaf)):
        if value < 1:
            raise ConfigError(f"must be >= 1, got {value}", field=name)
    edges = []
    inner = list(range(1, 1 + branching_core))
    edges += [(0, r) for r in inner]
    next_id = 1 + branching_core
    outer = []
    for r in inner:
        for _ in range(branching_leaf):
            edges.append((r, next_id))
            outer.append(next_id)
            next_id += 1
    consumers = []
    for r in outer:
        for _ in range(consumers_per_leaf):
            edges.append((r, next_id))
            consumers.append(next_id)
            next_id += 1
    return from_edges(next_id, edges, kind="core", root=0, consumers=tuple(consumers))


def gen_edge(spokes: int, spoke_len: int, consumers_per_spoke: int) -> Topology:
    """Producer 0 with disjoint router chains that fan out to consumers at the far end."""
    for name, value in (("spokes", spokes), ("spoke_len", spoke_len),
                        ("consumers_per_spoke", consumers_per_spoke)):
        if value < 1:
            raise ConfigError(f"must be >= 1, got {value}", field=name)

    def router(depth, spoke):
        return 1 + (depth - 1) * spokes + spoke

    edges = []
    for s in range(spokes):
        edges.append((0, router(1, s)))
        for d in range(2, spoke_len + 1):
            edges.append((router(d - 1, s), router(d, s)))
    next_id = 1 + spokes * spoke_len
    consumers = []
    for s in range(spokes):
        for _ in range(consumers_per_spoke):
            edges.append((router(spoke_len, s), next_id))
            consumers.append(next_id)
            next_id += 1
    return from_edges(next_id, edges, kind="edge", root=0, consumers=tuple(consumers))


def gen_random_geometric(n: int = DEFAULT_N, radio_range: float = DEFAULT_RANGE,
                         area: float = DEFAULT_AREA, seed=0,
                         max_retries: int = MAX_GEOMETRIC_RETRIES,
                         max_diameter: int | None = DEFAULT_MAX_DIAMETER) -> Topology:
    """Uniform placement in a square of the given area.

    Placements are redrawn until the graph is connected and, unless
    ``max_diameter`` is None, its hop diameter does not exceed it.
    """
    if n < 2:
        raise ConfigError("random geometric graph needs n >= 2", field="n")
    if radio_range <= 0 or area <= 0:
        raise ConfigError("range and area must be positive")
    side = math.sqrt(area)
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        pos = rng.uniform(0.0, side, size=(n, 2))
        d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=-1)
        within = d2 <= radio_range * radio_range
        np.fill_diagonal(within, False)
        adjacency = tuple(tuple(int(v) for v in np.flatnonzero(row)) for row in within)
        if min(bfs_distances(adjacency, 0)) < 0:
            continue
        if max_diameter is not None and any(
                max(bfs_distances(adjacency, u)) > max_diameter for u in range(n)):
            continue
        return Topology(n, adjacency, {}, kind="random_geometric", positions=pos)
    raise GenerationFailed(f"no connected placement of {n} nodes with range {radio_range} "
                           f"(max diameter {max_diameter}) after {max_retries} attempts")


def parse_edge_list(text: str, source: str = "<string>") -> Topology:
    edges = []
    params = {}
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not 2 <= len(parts) <= 4:
            raise TopologyParseError(f"{source}:{lineno}: expected 'u v [delay_ms] [loss]', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            delay = float(parts[2]) if len(parts) > 2 else None
            loss = float(parts[3]) if len(parts) > 3 else None
        except ValueError:
            raise TopologyParseError(f"{source}:{lineno}: cannot parse {raw!r}") from None
        if u < 0 or v < 0:
            raise TopologyParseError(f"{source}:{lineno}: negative node id")
        if u == v:
            raise SelfLoop(f"{source}:{lineno}: self-loop at node {u}")
        if delay is not None and delay < 0 or loss is not None and not 0 <= loss <= 1:
            raise TopologyParseError(f"{source}:{lineno}: delay must be >= 0 and loss in [0, 1]")
        edges.append((u, v))
        if delay is not None or loss is not None:
            params[(min(u, v), max(u, v))] = LinkParams(delay, loss)
        max_id = max(max_id, u, v)
    if not edges:
        raise TopologyParseError(f"{source}: no edges")
    try:
        return from_edges(max_id + 1, edges, params, kind="file")
    except Disconnected as exc:
        raise Disconnected(f"{source}: {exc}") from None


def load_topology(path) -> Topology:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TopologyParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_edge_list(text, str(path))


def format_edge_list(topology: Topology) -> str:
    lines = [f"# {topology.kind} topology, {topology.node_count} nodes"]
    for u, v in topology.edges:
        lp = topology.link(u, v)
        cols = [str(u), str(v)]
        if lp.delay_ms is not None or lp.loss is not None:
            cols.append(f"{lp.delay_ms if lp.delay_ms is not None else ''}")
            if lp.loss is not None:
                cols.append(f"{lp.loss}")
        lines.append(" ".join(cols).rstrip())
    return "\n".join(lines) + "\n"


TOPOLOGY_KINDS = ("core", "edge", "random_geometric", "line", "file")


def from_spec(spec: dict, seed=0) -> Topology:
    """Build a topology from a ``{kind: ..., **params}`` mapping.

    Random geometric graphs use ``spec['seed']`` if given, else ``seed``.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "core":
            return gen_core(int(spec.get("branching_core", 4)), int(spec.get("branching_leaf", 3)),
                            int(spec.get("consumers_per_leaf", 1)))
        if kind == "edge":
            return gen_edge(int(spec.get("spokes", 8)), int(spec.get("spoke_len", 2)),
                            int(spec.get("consumers_per_spoke", 3)))
        if kind == "random_geometric":
            return gen_random_geometric(int(spec.get("n", DEFAULT_N)),
                                        float(spec.get("range", DEFAULT_RANGE)),
                                        float(spec.get("area", DEFAULT_AREA)),
                                        seed=spec.get("seed", seed),
                                        max_retries=int(spec.get("max_retries", MAX_GEOMETRIC_RETRIES)),
                                        max_diameter=spec.get("max_diameter", DEFAULT_MAX_DIAMETER))
        if kind == "line":
            return gen_line(int(spec.get("n", 5)))
        if kind == "file":
            if "path" not in spec:
                raise ConfigError("file topology needs 'path'", field="topology.path")
            return load_topology(spec["path"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, TopologyError | ConfigError):
            raise
        raise ConfigError(f"bad topology parameter: {exc}", field="topology") from None
    raise ConfigError(f"unknown topology kind {kind!r} (known: {', '.join(TOPOLOGY_KINDS)})",
                      field="topology.kind")
