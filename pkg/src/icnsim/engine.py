"""Deterministic discrete-event simulation of Interest/Data exchange with in-network caching.

Simulated time is kept in integer microseconds so that latencies are exact
sums of link delays. A hop's delay is split between the Interest leg and the
Data leg, so a retrieval satisfied ``h`` hops away takes ``h`` times the
per-hop delay.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NoRoute
from .metrics import CacheSnapshot, FailedRequest, MetricsLog, RetrievalRecord
from .model import LOCAL_APP, ChunkName, Data, Interest, StrategyParams, StrategyKind, new_interest
from .node import REPLACEMENT_POLICIES, NodeState, split_faces
from .routing import RoutingTable, build_fibs
from .strategies import make_strategy, mcd_on_data_hit_side
from .topology import Topology, from_spec

INTEREST, DATA, TIMEOUT, SNAPSHOT = 0, 1, 2, 3
EVENT_NAMES = ("InterestArrival", "DataArrival", "InterestTimeout", "SnapshotTick")

# spawn keys for the independent random streams of one run
_NODE_STREAM, _WORKLOAD_STREAM, _LINK_STREAM = 0, 1, 2

PACINGS = ("window", "spaced")


def _us(ms: float) -> int:
    return int(round(ms * 1000))


@dataclass(frozen=True)
class WorkloadSpec:
    """Which nodes produce and request content, and when requests are issued.

    ``uniform``: every requester asks ``requests_per_prefix`` uniformly drawn
    chunks from each prefix in its FIB. ``scripted``: ``requests`` is a list
    of ``(consumer, prefix, chunk_id, time_ms)``.

    ``producers``/``requesters`` accept ``"all"``, ``"root"``/``"consumers"``
    (the roles of generated trees and lines) or an explicit list of ids.
    """

    kind: str = "uniform"
    producers: str | tuple = "all"
    requesters: str | tuple = "all"
    requests_per_prefix: int = 1
    pacing: str = "window"
    window_ms: float = 10_000.0
    spacing_ms: float = 100.0
    start_ms: float = 0.0
    requests: tuple = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "scripted"):
            raise ConfigError(f"unknown workload kind {self.kind!r}", field="workload.kind")
        if self.pacing not in PACINGS:
            raise ConfigError(f"unknown pacing {self.pacing!r} (known: {', '.join(PACINGS)})",
                              field="workload.pacing")
        if self.requests_per_prefix < 1:
            raise ConfigError("must be >= 1", field="workload.requests_per_prefix")
        if self.window_ms <= 0 or self.spacing_ms < 0 or self.start_ms < 0:
            raise ConfigError("window must be positive, spacing and start non-negative",
                              field="workload")


@dataclass(frozen=True)
class RunConfig:
    topology: dict | Topology = field(default_factory=lambda: {"kind": "random_geometric"})
    strategy: StrategyParams = field(default_factory=lambda: StrategyParams(StrategyKind.CEE))
    cache_capacity: int = 5
    replacement: str = "lru"
    cache_at_consumer: bool = False
    chunk_count: int = 50
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    per_hop_delay_ms: float = 10.0
    jitter_ms: float = 0.0
    loss: float = 0.0
    pit_timeout_ms: float = 2000.0
    retries: int = 3
    seed: int = 0
    snapshot_period_ms: float = 1000.0
    max_time_ms: float = 300_000.0
    trace: bool = False

    def __post_init__(self):
        if isinstance(self.strategy, str):
            object.__setattr__(self, "strategy", StrategyParams.parse(self.strategy))
        checks = [
            (self.cache_capacity >= 1, "cache_capacity", "must be >= 1"),
            (self.replacement in REPLACEMENT_POLICIES, "replacement",
             f"must be one of {', '.join(REPLACEMENT_POLICIES)}"),
            (self.chunk_count >= 1, "chunk_count", "must be >= 1"),
            (self.per_hop_delay_ms >= 0, "per_hop_delay_ms", "must be >= 0"),
            (self.jitter_ms >= 0, "jitter_ms", "must be >= 0"),
            (0.0 <= self.loss <= 1.0, "loss", "must be in [0, 1]"),
            (self.pit_timeout_ms > 0, "pit_timeout_ms", "must be positive"),
            (self.retries >= 0, "retries", "must be >= 0"),
            (self.snapshot_period_ms >= 0, "snapshot_period_ms", "must be >= 0"),
            (self.max_time_ms > 0, "max_time_ms", "must be positive"),
        ]
        for ok, name, msg in checks:
            if not ok:
                raise ConfigError(msg, field=name)

    def with_(self, **changes) -> RunConfig:
        return replace(self, **changes)


def baseline_latency(hops: int, config) -> float:
    """Expected no-cache latency in ms for a retrieval over ``hops`` hops (jitter excluded)."""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    delay = config if isinstance(config, int | float) else config.per_hop_delay_ms
    return hops * float(delay)


@dataclass
class Request:
    seq: int
    consumer: int
    name: ChunkName
    issue_us: int
    distance: int
    retries: int = 0
    attempt: int = 0
    done: bool = False
    aggregated: bool = False


@dataclass
class RunResult:
    config: RunConfig
    topology: Topology
    routing: RoutingTable
    log: MetricsLog
    snapshots: list[CacheSnapshot]
    trace: list
    events: int
    end_time_ms: float

    def __iter__(self):
        # allows ``log, snapshots = run(cfg)``
        return iter((self.log, self.snapshots))


def resolve_nodes(selector, topology: Topology, role: str) -> tuple[int, ...]:
    if isinstance(selector, str):
        if selector == "all":
            return tuple(range(topology.node_count))
        if selector in ("root", "producer"):
            if topology.root is None:
                raise ConfigError(f"topology kind {topology.kind!r} has no root", field=f"workload.{role}")
            return (topology.root,)
        if selector == "consumers":
            if not topology.consumers:
                raise ConfigError(f"topology kind {topology.kind!r} has no consumers",
                                  field=f"workload.{role}")
            return topology.consumers
        raise ConfigError(f"unknown node selector {selector!r}", field=f"workload.{role}")
    nodes = tuple(sorted(set(int(v) for v in selector)))
    bad = [v for v in nodes if not 0 <= v < topology.node_count]
    if bad or not nodes:
        raise ConfigError(f"invalid node ids {bad or '(empty)'}", field=f"workload.{role}")
    return nodes


def generate_workload(config: RunConfig, topology: Topology, routing: RoutingTable, rng) -> list[tuple]:
    """Return ``(issue_us, consumer, prefix, chunk_id)`` tuples sorted by issue time."""
    wl = config.workload
    start = _us(wl.start_ms)
    if wl.kind == "scripted":
        out = []
        for item in wl.requests:
            consumer, prefix, chunk, t_ms = item
            if not 0 <= chunk < config.chunk_count:
                raise ConfigError(f"chunk id {chunk} outside [0, {config.chunk_count})",
                                  field="workload.requests")
            out.append((start + _us(t_ms), int(consumer), int(prefix), int(chunk)))
        return sorted(out, key=lambda r: r[0])
    requesters = resolve_nodes(wl.requesters, topology, "requesters")
    wanted = []
    for r in requesters:
        for prefix in routing.prefixes_at(r):
            for _ in range(wl.requests_per_prefix):
                wanted.append((r, prefix, int(rng.integers(config.chunk_count))))
    if wl.pacing == "window":
        times = rng.integers(0, _us(wl.window_ms), size=len(wanted))
        out = [(start + int(t), *w) for t, w in zip(times, wanted)]
    else:
        order = rng.permutation(len(wanted))
        step = _us(wl.spacing_ms)
        out = [(start + i * step, *wanted[j]) for i, j in enumerate(order)]
    # stable sort keeps generation order among equal issue times
    return sorted(out, key=lambda r: r[0])


def _node_rng(seed: int, node: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_NODE_STREAM, node)))


class Simulator:
    """One run: owns every node's state and the event queue.

    ``node_rng`` optionally maps a node id to an object with ``random()`` and
    ``integers()``, replacing the per-node streams (used to force draws).
    """

    def __init__(self, config: RunConfig, *, topology: Topology | None = None,
                 routing: RoutingTable | None = None, node_rng=None):
        self.config = config
        if topology is None:
            topology = config.topology if isinstance(config.topology, Topology) \
                else from_spec(config.topology, seed=config.seed)
        self.topology = topology
        wl = config.workload
        if wl.kind == "scripted" and wl.producers == "all" and wl.requests:
            producers = tuple(sorted({int(r[1]) for r in wl.requests}))
        else:
            producers = resolve_nodes(wl.producers, topology, "producers")
        self.producers = producers
        self.routing = routing if routing is not None else build_fibs(topology, producers)
        self.strategy = make_strategy(config.strategy)
        seed = config.seed
        make_rng = node_rng if node_rng is not None else (lambda v: _node_rng(seed, v))
        lifetime = _us(config.pit_timeout_ms)
        self.nodes = []
        for v in range(topology.node_count):
            node = NodeState(v, capacity=config.cache_capacity, policy=config.replacement,
                             rng=make_rng(v), k=config.strategy.k,
                             produces=(v,) if v in producers else (), pit_lifetime=lifetime)
            for prefix in self.routing.prefixes_at(v):
                node.fib[prefix] = list(self.routing.fib(v, prefix))
            self.nodes.append(node)
        self.workload_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_WORKLOAD_STREAM,)))
        self.link_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_LINK_STREAM,)))

        self._queue: list = []
        self._order = itertools.count()
        self.now = 0
        self.requests: list[Request] = []
        self.log = MetricsLog()
        self.snapshots: list[CacheSnapshot] = []
        self.trace: list | None = [] if config.trace else None
        self.events = 0

        self._hop_us = _us(config.per_hop_delay_ms)
        self._jitter_us = _us(config.jitter_ms)
        self._link_cache: dict = {}

    # -- scheduling ------------------------------------------------------

    def _push(self, time, kind, node, a=None, b=None):
        heapq.heappush(self._queue, (time, next(self._order), kind, node, a, b))

    def _link(self, u, v):
        key = (u, v) if u < v else (v, u)
        cached = self._link_cache.get(key)
        if cached is None:
            lp = self.topology.link(u, v)
            hop = self._hop_us if lp.delay_ms is None else _us(lp.delay_ms)
            loss = self.config.loss if lp.loss is None else lp.loss
            # Interest leg gets the floor half so both legs sum to the hop delay.
            cached = (hop // 2, hop - hop // 2, loss)
            self._link_cache[key] = cached
        return cached

    def _transmit(self, u, v, kind, packet):
        up, down, loss = self._link(u, v)
        delay = up if kind == INTEREST else down
        if self._jitter_us:
            delay = max(0, delay + int(self.link_rng.integers(-self._jitter_us, self._jitter_us + 1)))
        if loss > 0.0 and self.link_rng.random() < loss:
            return
        self._push(self.now + delay, kind, v, packet, u)

    # -- packet handling -------------------------------------------------

    def deliver_interest(self, node: NodeState, interest: Interest, face: int):
        name = interest.name
        if node.cs_lookup(name):
            action = self.strategy.on_hit(interest, node)
            if action.mcd_delete_after_hit:
                mcd_on_data_hit_side(node, name)
            if self.trace is not None:
                self.trace.append((self.now, node.id, name, "hit"))
            seed = action.data_seed
            data = Data(name, seed.tsb, seed.tsi, seed.interval, node.id, 0)
            if face == LOCAL_APP:
                self._complete(interest.seq, data)
            else:
                self._transmit(node.id, face, DATA, data.hopped())
            return
        is_new = node.pit_register(name, face, interest.seq, self.now)
        if not is_new:
            # satisfied by Data another request pulled, at the consumer or upstream
            self.requests[interest.seq].aggregated = True
        if not is_new:
            return
        try:
            next_hop = node.fib_next_hop(name.prefix)
        except NoRoute:
            node.pit_consume(name, self.now)
            if face == LOCAL_APP:
                self._fail(self.requests[interest.seq], "no_route")
            return
        if face != LOCAL_APP and self.strategy.on_miss(interest).tsi_increment:
            interest = interest.with_tsi(interest.tsi + 1)
        self._transmit(node.id, next_hop, INTEREST, interest)

    def deliver_data(self, node: NodeState, data: Data, face: int):
        downstream = node.pit_consume(data.name, self.now)
        if not downstream:
            self.log.unsolicited += 1
            return
        faces, local = split_faces(downstream)
        if faces or self.config.cache_at_consumer:
            action = self.strategy.on_data(data, node)
            if action.cache:
                node.cs_insert(data.name)
            if self.trace is not None:
                self.trace.append((self.now, node.id, data.name, "cache" if action.cache else "skip"))
            data = action.apply(data)
        for seq in local:
            self._complete(seq, data)
        if faces:
            out = data.hopped()
            for f in faces:
                self._transmit(node.id, f, DATA, out)

    # -- request bookkeeping ----------------------------------------------

    def _issue(self, req: Request):
        req.attempt += 1
        self._push(self.now + _us(self.config.pit_timeout_ms), TIMEOUT, req.consumer, req.seq, req.attempt)
        self.deliver_interest(self.nodes[req.consumer], new_interest(req.name, req.consumer, req.seq),
                              LOCAL_APP)

    def _complete(self, seq: int, data: Data):
        req = self.requests[seq]
        if req.done:
            return
        req.done = True
        cfg = self.config
        self.log.records.append(RetrievalRecord(
            run_seed=cfg.seed, strategy=cfg.strategy.label, consumer=req.consumer,
            prefix=req.name.prefix, chunk_id=req.name.chunk_id, distance_to_source=req.distance,
            hops_to_hit=data.hops, latency=(self.now - req.issue_us) / 1000.0, hit_node=data.hit_node,
            issue_time=req.issue_us / 1000.0, satisfy_time=self.now / 1000.0, retries=req.retries,
            seq=seq, aggregated=req.aggregated))

    def _fail(self, req: Request, reason: str):
        if req.done:
            return
        req.done = True
        cfg = self.config
        self.log.failures.append(FailedRequest(
            run_seed=cfg.seed, strategy=cfg.strategy.label, consumer=req.consumer,
            prefix=req.name.prefix, chunk_id=req.name.chunk_id, distance_to_source=req.distance,
            issue_time=req.issue_us / 1000.0, retries=req.retries, reason=reason, seq=req.seq))

    def _timeout(self, seq: int, attempt: int):
        req = self.requests[seq]
        if req.done or attempt != req.attempt:
            return
        if req.retries >= self.config.retries:
            self._fail(req, "timeout")
            return
        req.retries += 1
        self._issue(req)

    def _snapshot(self):
        self.snapshots.append(CacheSnapshot(self.now / 1000.0,
                                            tuple(tuple(sorted(n.cs)) for n in self.nodes)))

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        pending = []
        for issue_us, consumer, prefix, chunk in generate_workload(cfg, self.topology, self.routing,
                                                                   self.workload_rng):
            name = ChunkName(prefix, chunk)
            if consumer == prefix:
                distance = 0
            else:
                try:
                    distance = self.routing.rank(consumer, prefix)
                except NoRoute:
                    distance = -1
            req = Request(len(self.requests), consumer, name, issue_us, distance)
            self.requests.append(req)
            pending.append(req)
        for req in pending:
            # issue events carry the request in slot ``a`` and no packet
            self._push(req.issue_us, INTEREST, req.consumer, req, None)
        period = _us(cfg.snapshot_period_ms)
        if period:
            self._push(period, SNAPSHOT, -1)
        horizon = _us(cfg.max_time_ms)
        queue = self._queue
        nodes = self.nodes
        last_snapshot = None
        while queue:
            time, _, kind, v, a, b = queue[0]
            if time > horizon:
                break
            heapq.heappop(queue)
            self.now = time
            self.events += 1
            if kind == INTEREST:
                if b is None:
                    if a.distance < 0:
                        self._fail(a, "no_route")
                    else:
                        self._issue(a)
                else:
                    self.deliver_interest(nodes[v], a, b)
            elif kind == DATA:
                self.deliver_data(nodes[v], a, b)
            elif kind == TIMEOUT:
                self._timeout(a, b)
            else:
                self._snapshot()
                last_snapshot = time
                if queue:
                    self._push(time + period, SNAPSHOT, -1)
        if queue:
            self.now = max(self.now, horizon)
        if last_snapshot != self.now:
            self._snapshot()
        for req in self.requests:
            if not req.done:
                self._fail(req, "horizon")
        return RunResult(cfg, self.topology, self.routing, self.log, self.snapshots,
                         self.trace or [], self.events, self.now / 1000.0)


def run(config: RunConfig, **kwargs) -> RunResult:
    """Build topology and FIBs, generate the workload and process events to quiescence."""
    return Simulator(config, **kwargs).run()
