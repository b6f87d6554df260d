"""Caching decision policies.

Each policy is split into a hit-side rule (how the satisfying node seeds the
Data packet), a miss-side rule (what a forwarding node does to the Interest)
and a data-side rule (whether a node on the return path caches, and how it
rewrites the Data fields before forwarding). All rules are pure functions of
packet fields, node label and parameters, plus one draw from the caller's rng
for the probabilistic policies.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedPacket
from .model import ChunkName, Data, Interest, StrategyKind, StrategyParams


@dataclass(frozen=True, slots=True)
class DataSeed:
    tsb: int
    tsi: int
    interval: int


@dataclass(frozen=True, slots=True)
class InterestAction:
    satisfy: bool
    data_seed: DataSeed | None = None
    tsi_increment: bool = False
    mcd_delete_after_hit: bool = False


@dataclass(frozen=True, slots=True)
class DataAction:
    cache: bool
    tsb: int
    interval: int
    # True when the decision was taken on the already-updated fields.
    decided_after_update: bool = False

    def apply(self, data: Data) -> Data:
        if data.tsb == self.tsb and data.interval == self.interval:
            return data
        return data.with_fields(self.tsb, self.interval)


FORWARD = InterestAction(satisfy=False)
FORWARD_COUNTING = InterestAction(satisfy=False, tsi_increment=True)


def _keep(data: Data, cache: bool) -> DataAction:
    return DataAction(cache, data.tsb, data.interval)


# -- hit side ---------------------------------------------------------------

def default_on_hit(interest: Interest, i: int = 0) -> InterestAction:
    # Every strategy seeds all fields; the ones it does not read are ignored.
    return InterestAction(True, DataSeed(tsb=1, tsi=interest.tsi, interval=i))


def lcd_on_hit(interest: Interest) -> InterestAction:
    return InterestAction(True, DataSeed(tsb=1, tsi=interest.tsi, interval=0))


def mcd_on_hit(interest: Interest) -> InterestAction:
    return InterestAction(True, DataSeed(tsb=1, tsi=interest.tsi, interval=0),
                          mcd_delete_after_hit=True)


def intervals_on_hit(interest: Interest, i: int) -> InterestAction:
    return InterestAction(True, DataSeed(tsb=1, tsi=interest.tsi, interval=i))


# -- miss side --------------------------------------------------------------

def probcache_on_interest_miss(interest: Interest) -> InterestAction:
    return FORWARD_COUNTING


# -- data side --------------------------------------------------------------

def cee_on_data(data: Data) -> DataAction:
    return _keep(data, True)


def nocache_on_data(data: Data) -> DataAction:
    return _keep(data, False)


def lcd_on_data(data: Data) -> DataAction:
    # Checked before the increment.
    return DataAction(data.tsb == 1, data.tsb + 1, data.interval)


def mcd_on_data_hit_side(previous_hit_node, name: ChunkName) -> bool:
    """Delete ``name`` from the hit node's store after a hit; producers keep theirs."""
    if previous_hit_node.is_producer_of(name):
        return False
    return previous_hit_node.cs_remove(name)


def prob_on_data(data: Data, p: float, rng) -> DataAction:
    return _keep(data, rng.random() < p)


def probcache_weight(tsb: int, tsi: int) -> float:
    if tsi < 1:
        raise MalformedPacket(f"Data with tsi={tsi}")
    return min(1.0, max(0.0, tsb / tsi))


def probcache_on_data(data: Data, rng) -> DataAction:
    tsb = data.tsb + 1
    weight = probcache_weight(tsb, data.tsi)
    return DataAction(rng.random() < weight, tsb, data.interval, True)


def probcache_inv_on_data(data: Data, rng) -> DataAction:
    tsb = data.tsb + 1
    weight = probcache_weight(tsb, data.tsi)
    return DataAction(rng.random() < 1.0 - weight, tsb, data.interval, True)


def labels_on_data(data: Data, node_label: int, k: int) -> DataAction:
    return _keep(data, data.name.chunk_id % k == node_label)


def intervals_on_data(data: Data, i: int) -> DataAction:
    if data.interval == 0:
        return DataAction(True, data.tsb, i)
    return DataAction(False, data.tsb, data.interval - 1)


# -- engine-facing policy objects -------------------------------------------

class Strategy:
    """Binds one policy's rules to its parameters for use by the engine."""

    def __init__(self, params: StrategyParams):
        self.params = params

    @property
    def name(self) -> str:
        return self.params.label

    def on_hit(self, interest: Interest, node) -> InterestAction:
        return default_on_hit(interest, self.params.i)

    def on_miss(self, interest: Interest) -> InterestAction:
        return FORWARD

    def on_data(self, data: Data, node) -> DataAction:
        raise NotImplementedError


class NoCache(Strategy):
    def on_data(self, data, node):
        return nocache_on_data(data)


class CacheEverything(Strategy):
    def on_data(self, data, node):
        return cee_on_data(data)


class LeaveCopyDown(Strategy):
    def on_hit(self, interest, node):
        return lcd_on_hit(interest)

    def on_data(self, data, node):
        return lcd_on_data(data)


class MoveCopyDown(LeaveCopyDown):
    def on_hit(self, interest, node):
        return mcd_on_hit(interest)


class Prob(Strategy):
    def on_data(self, data, node):
        return prob_on_data(data, self.params.p, node.rng)


class ProbCache(Strategy):
    def on_miss(self, interest):
        return probcache_on_interest_miss(interest)

    def on_data(self, data, node):
        return probcache_on_data(data, node.rng)


class ProbCacheInv(ProbCache):
    def on_data(self, data, node):
        return probcache_inv_on_data(data, node.rng)


class Labels(Strategy):
    def on_data(self, data, node):
        return labels_on_data(data, node.label, self.params.k)


class Intervals(Strategy):
    def on_hit(self, interest, node):
        return intervals_on_hit(interest, self.params.i)

    def on_data(self, data, node):
        return intervals_on_data(data, self.params.i)


_CLASSES = {
    StrategyKind.NOCACHE: NoCache,
    StrategyKind.CEE: CacheEverything,
    StrategyKind.LCD: LeaveCopyDown,
    StrategyKind.MCD: MoveCopyDown,
    StrategyKind.PROB: Prob,
    StrategyKind.PROBCACHE: ProbCache,
    StrategyKind.PROBCACHE_INV: ProbCacheInv,
    StrategyKind.LABELS: Labels,
    StrategyKind.INTERVALS: Intervals,
}


def make_strategy(params: StrategyParams | str) -> Strategy:
    if isinstance(params, str):
        params = StrategyParams.parse(params)
    return _CLASSES[params.kind](params)
