"""Evaluation quantities over retrieval logs: hop and latency reduction by distance, overall means."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, fields

from .errors import EmptyLog
from .model import ChunkName

DEFAULT_MIN_SAMPLES = 5


@dataclass(frozen=True, slots=True)
class RetrievalRecord:
    run_seed: int
    strategy: str
    consumer: int
    prefix: int
    chunk_id: int
    distance_to_source: int
    hops_to_hit: int
    latency: float
    hit_node: int
    issue_time: float
    satisfy_time: float
    retries: int = 0
    seq: int = 0
    aggregated: bool = False


@dataclass(frozen=True, slots=True)
class FailedRequest:
    run_seed: int
    strategy: str
    consumer: int
    prefix: int
    chunk_id: int
    distance_to_source: int
    issue_time: float
    retries: int
    reason: str
    seq: int = 0


RECORD_COLUMNS = tuple(f.name for f in fields(RetrievalRecord))


@dataclass
class MetricsLog:
    records: list[RetrievalRecord] = field(default_factory=list)
    failures: list[FailedRequest] = field(default_factory=list)
    unsolicited: int = 0

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def extend(self, other: MetricsLog) -> MetricsLog:
        self.records.extend(other.records)
        self.failures.extend(other.failures)
        self.unsolicited += other.unsolicited
        return self

    def for_strategy(self, strategy: str) -> MetricsLog:
        return MetricsLog([r for r in self.records if r.strategy == strategy],
                          [f for f in self.failures if f.strategy == strategy])

    def for_seed(self, seed: int) -> MetricsLog:
        return MetricsLog([r for r in self.records if r.run_seed == seed],
                          [f for f in self.failures if f.run_seed == seed])

    @property
    def failure_rate(self) -> float:
        total = len(self.records) + len(self.failures)
        return len(self.failures) / total if total else 0.0


@dataclass(frozen=True)
class CacheSnapshot:
    time: float
    contents: tuple[tuple[ChunkName, ...], ...]

    def occupancy(self) -> int:
        return sum(len(c) for c in self.contents)


def _records(log) -> list[RetrievalRecord]:
    records = log.records if isinstance(log, MetricsLog) else list(log)
    if not records:
        raise EmptyLog("no satisfied retrievals in log")
    return records


def _per_hop_delay(config) -> float:
    if isinstance(config, int | float):
        return float(config)
    return float(config.per_hop_delay_ms)


@dataclass(frozen=True)
class DistanceStats:
    """Sample count and means for one distance-to-source bucket."""

    distance: int
    n: int
    mean_hops_to_hit: float
    mean_latency: float

    @property
    def hop_reduction(self) -> float:
        return self.distance - self.mean_hops_to_hit

    def latency_reduction(self, per_hop_delay_ms: float) -> float:
        return self.distance * per_hop_delay_ms - self.mean_latency

    def low_confidence(self, min_samples: int = DEFAULT_MIN_SAMPLES) -> bool:
        return self.n < min_samples


def stats_by_distance(log) -> dict[int, DistanceStats]:
    hops = defaultdict(list)
    lat = defaultdict(list)
    for r in _records(log):
        hops[r.distance_to_source].append(r.hops_to_hit)
        lat[r.distance_to_source].append(r.latency)
    return {d: DistanceStats(d, len(hops[d]), math.fsum(hops[d]) / len(hops[d]),
                             math.fsum(lat[d]) / len(lat[d]))
            for d in sorted(hops)}


def merge_stats(parts) -> dict[int, DistanceStats]:
    """Sample-weighted combination of per-log ``stats_by_distance`` results."""
    acc = defaultdict(list)
    for part in parts:
        for d, s in part.items():
            acc[d].append(s)
    out = {}
    for d in sorted(acc):
        group = acc[d]
        n = sum(s.n for s in group)
        out[d] = DistanceStats(d, n, math.fsum(s.n * s.mean_hops_to_hit for s in group) / n,
                               math.fsum(s.n * s.mean_latency for s in group) / n)
    return out


def hop_reduction_by_distance(log) -> dict[int, float]:
    return {d: s.hop_reduction for d, s in stats_by_distance(log).items()}


def latency_by_distance(log) -> dict[int, float]:
    return {d: s.mean_latency for d, s in stats_by_distance(log).items()}


def latency_reduction_by_distance(log, config) -> dict[int, float]:
    """Per distance: no-cache latency for that many hops minus measured mean latency."""
    delay = _per_hop_delay(config)
    return {d: s.latency_reduction(delay) for d, s in stats_by_distance(log).items()}


@dataclass(frozen=True)
class Summary:
    n: int
    mean_distance: float
    mean_hops: float
    mean_latency: float
    mean_latency_reduction: float
    failures: int = 0

    @property
    def failure_rate(self) -> float:
        total = self.n + self.failures
        return self.failures / total if total else 0.0

    @property
    def mean_hop_reduction(self) -> float:
        return self.mean_distance - self.mean_hops


def overall_summary(log, config) -> Summary:
    delay = _per_hop_delay(config)
    records = _records(log)
    n = len(records)
    failures = len(log.failures) if isinstance(log, MetricsLog) else 0
    return Summary(
        n=n,
        mean_distance=math.fsum(r.distance_to_source for r in records) / n,
        mean_hops=math.fsum(r.hops_to_hit for r in records) / n,
        mean_latency=math.fsum(r.latency for r in records) / n,
        mean_latency_reduction=math.fsum(r.distance_to_source * delay - r.latency for r in records) / n,
        failures=failures,
    )


def summary_by_strategy(log: MetricsLog, config) -> dict[str, Summary]:
    names = list(dict.fromkeys(r.strategy for r in log.records))
    return {s: overall_summary(log.for_strategy(s), config) for s in names}


@dataclass(frozen=True)
class Diversity:
    unique_chunks: int
    total_slots_used: int
    redundancy_ratio: float | None  # None when nothing is cached


def cache_diversity(snapshot: CacheSnapshot) -> Diversity:
    unique = set()
    total = 0
    for names in snapshot.contents:
        unique.update(names)
        total += len(names)
    ratio = total / len(unique) if unique else None
    return Diversity(len(unique), total, ratio)


def label_violations(snapshot: CacheSnapshot, k: int) -> list[tuple[int, ChunkName]]:
    """(node, name) pairs whose chunk id is not congruent to the node label mod k."""
    return [(node, name) for node, names in enumerate(snapshot.contents)
            for name in names if name.chunk_id % k != node % k]
