"""Core value types: chunk names, Interest/Data packets and strategy parameters."""
from __future__ import annotations

import enum
import re
from dataclasses import asdict, dataclass
from typing import NamedTuple

from .errors import ConfigError, InvalidChunkId

NodeId = int

#: Face identifier for the node-local application (the consumer itself).
LOCAL_APP: int = -1

DEFAULT_CHUNK_COUNT = 50


class ChunkName(NamedTuple):
    """(producer prefix, chunk id); structural equality, usable as a map key."""

    prefix: NodeId
    chunk_id: int

    def __str__(self):
        return f"{self.prefix}/{self.chunk_id}"

    @classmethod
    def parse(cls, text: str) -> ChunkName:
        prefix, chunk = text.split("/")
        return cls(int(prefix), int(chunk))


def make_chunk_name(prefix: NodeId, chunk_id: int, chunk_count: int = DEFAULT_CHUNK_COUNT) -> ChunkName:
    if not 0 <= chunk_id < chunk_count:
        raise InvalidChunkId(f"chunk id {chunk_id} outside [0, {chunk_count})")
    if prefix < 0:
        raise InvalidChunkId(f"prefix {prefix} is not a node id")
    return ChunkName(prefix, chunk_id)


@dataclass(frozen=True, slots=True)
class Interest:
    name: ChunkName
    tsi: int
    origin: NodeId
    seq: int

    def with_tsi(self, tsi: int) -> Interest:
        return Interest(self.name, tsi, self.origin, self.seq)


@dataclass(frozen=True, slots=True)
class Data:
    """Data packet metadata; payloads are not modeled.

    ``hops`` counts link traversals since the Data left ``hit_node`` and is
    what the consumer records as hops to hit.
    """

    name: ChunkName
    tsb: int
    tsi: int
    interval: int
    hit_node: NodeId
    hops: int = 0

    def with_fields(self, tsb: int, interval: int) -> Data:
        return Data(self.name, tsb, self.tsi, interval, self.hit_node, self.hops)

    def hopped(self) -> Data:
        return Data(self.name, self.tsb, self.tsi, self.interval, self.hit_node, self.hops + 1)


def new_interest(name: ChunkName, origin: NodeId, seq: int) -> Interest:
    return Interest(name=name, tsi=1, origin=origin, seq=seq)


def packet_to_dict(packet: Interest | Data) -> dict:
    d = asdict(packet)
    d["name"] = str(packet.name)
    d["type"] = type(packet).__name__
    return d


def packet_from_dict(d: dict) -> Interest | Data:
    d = dict(d)
    kind = d.pop("type")
    d["name"] = ChunkName.parse(d["name"])
    if kind == "Interest":
        return Interest(**d)
    if kind == "Data":
        return Data(**d)
    raise ValueError(f"unknown packet type {kind!r}")


class StrategyKind(str, enum.Enum):
    CEE = "CEE"
    LCD = "LCD"
    MCD = "MCD"
    PROB = "Prob"
    PROBCACHE = "ProbCache"
    PROBCACHE_INV = "ProbCacheInv"
    LABELS = "Labels"
    INTERVALS = "Intervals"
    NOCACHE = "NoCache"


_ALIASES = {
    "probcache-inv": StrategyKind.PROBCACHE_INV,
    "probcache_inv": StrategyKind.PROBCACHE_INV,
    "none": StrategyKind.NOCACHE,
    "no-cache": StrategyKind.NOCACHE,
}
_BY_LOWER = {k.value.lower(): k for k in StrategyKind} | _ALIASES
_CALL_RE = re.compile(r"^\s*([A-Za-z_-]+)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


@dataclass(frozen=True)
class StrategyParams:
    kind: StrategyKind
    p: float = 0.5
    k: int = 4
    i: int = 2

    def __post_init__(self):
        if not isinstance(self.kind, StrategyKind):
            object.__setattr__(self, "kind", strategy_kind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p={self.p} outside [0, 1]", field="p")
        if self.k < 1:
            raise ConfigError(f"k={self.k} must be >= 1", field="k")
        if self.i < 0:
            raise ConfigError(f"i={self.i} must be >= 0", field="i")

    @property
    def label(self) -> str:
        """Display name, e.g. ``Prob(0.5)`` or ``Labels(4)``."""
        if self.kind is StrategyKind.PROB:
            return f"Prob({self.p:g})"
        if self.kind is StrategyKind.LABELS:
            return f"Labels({self.k})"
        if self.kind is StrategyKind.INTERVALS:
            return f"Intervals({self.i})"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> StrategyParams:
        """Parse ``CEE``, ``Prob(0.3)``, ``Labels(4)``, ``Intervals(2)``, ``ProbCache-Inv``."""
        m = _CALL_RE.match(text)
        if not m:
            raise ConfigError(f"cannot parse strategy {text!r}", field="strategy")
        kind = strategy_kind(m.group(1))
        arg = m.group(2)
        if not arg:
            return cls(kind)
        try:
            if kind is StrategyKind.PROB:
                return cls(kind, p=float(arg))
            if kind is StrategyKind.LABELS:
                return cls(kind, k=int(arg))
            if kind is StrategyKind.INTERVALS:
                return cls(kind, i=int(arg))
        except ValueError:
            raise ConfigError(f"bad parameter in {text!r}", field="strategy") from None
        raise ConfigError(f"strategy {kind.value} takes no parameter", field="strategy")


def strategy_kind(name: str) -> StrategyKind:
    try:
        return _BY_LOWER[str(name).strip().lower()]
    except KeyError:
        known = ", ".join(k.value for k in StrategyKind)
        raise ConfigError(f"unknown strategy {name!r} (known: {known})", field="strategy") from None
