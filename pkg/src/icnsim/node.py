"""Per-node NDN state: Content Store, PIT and rank-ordered FIB."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import NoRoute
from .model import LOCAL_APP, ChunkName, NodeId

REPLACEMENT_POLICIES = ("lru", "fifo", "random")


class ContentStore:
    """Bounded store of chunk names.

    ``lru`` refreshes recency on hits and re-inserts; ``fifo`` evicts by
    insertion order only; ``random`` evicts a uniformly drawn entry using
    the supplied rng.
    """

    __slots__ = ("capacity", "policy", "_entries", "_rng")

    def __init__(self, capacity: int = 5, policy: str = "lru", rng=None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if policy not in REPLACEMENT_POLICIES:
            raise ValueError(f"unknown replacement policy {policy!r}")
        if policy == "random" and rng is None:
            raise ValueError("random replacement needs an rng")
        self.capacity = capacity
        self.policy = policy
        self._entries: OrderedDict[ChunkName, None] = OrderedDict()
        self._rng = rng

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name in self._entries

    def __iter__(self):
        return iter(self._entries)

    def names(self) -> list[ChunkName]:
        """Entries, least recently used first."""
        return list(self._entries)

    def lookup(self, name: ChunkName) -> bool:
        if name in self._entries:
            if self.policy == "lru":
                self._entries.move_to_end(name)
            return True
        return False

    def insert(self, name: ChunkName) -> ChunkName | None:
        entries = self._entries
        if name in entries:
            if self.policy == "lru":
                entries.move_to_end(name)
            return None
        evicted = None
        if len(entries) >= self.capacity:
            if self.policy == "random":
                victim = list(entries)[int(self._rng.integers(len(entries)))]
                del entries[victim]
                evicted = victim
            else:
                evicted, _ = entries.popitem(last=False)
        entries[name] = None
        return evicted

    def remove(self, name: ChunkName) -> bool:
        if name in self._entries:
            del self._entries[name]
            return True
        return False


@dataclass(slots=True)
class PitEntry:
    name: ChunkName
    created_at: int
    downstream: set = field(default_factory=set)


class FibEntry(NamedTuple):
    prefix: NodeId
    next_hop: NodeId
    rank: int


class NodeState:
    """Mutable state of one node; owned by a single simulation run.

    ``produces`` is the set of prefixes this node owns. Produced chunks are
    always available and never occupy Content Store slots.
    """

    __slots__ = ("id", "label", "cs", "pit", "fib", "rng", "produces", "pit_lifetime")

    def __init__(self, node_id: NodeId, *, capacity=5, policy="lru", rng=None, k=4,
                 produces=(), pit_lifetime=None):
        self.id = node_id
        self.label = node_id % k
        self.rng = rng
        self.cs = ContentStore(capacity, policy, rng)
        self.pit: dict[ChunkName, PitEntry] = {}
        self.fib: dict[NodeId, list[FibEntry]] = {}
        self.produces = frozenset(produces)
        self.pit_lifetime = pit_lifetime

    def __repr__(self):
        return f"NodeState(id={self.id}, cs={self.cs.names()}, pit={len(self.pit)})"

    def is_producer_of(self, name: ChunkName) -> bool:
        return name.prefix in self.produces

    # Content Store

    def cs_lookup(self, name: ChunkName) -> bool:
        if name.prefix in self.produces:
            return True
        return self.cs.lookup(name)

    def cs_insert(self, name: ChunkName) -> ChunkName | None:
        return self.cs.insert(name)

    def cs_remove(self, name: ChunkName) -> bool:
        return self.cs.remove(name)

    # PIT

    def _live_entry(self, name, now):
        entry = self.pit.get(name)
        if entry is None:
            return None
        if self.pit_lifetime is not None and now - entry.created_at >= self.pit_lifetime:
            del self.pit[name]
            return None
        return entry

    def pit_register(self, name: ChunkName, face: int, seq: int, now: int = 0) -> bool:
        """Record the downstream face; True iff no live entry existed (caller forwards)."""
        entry = self._live_entry(name, now)
        if entry is None:
            self.pit[name] = PitEntry(name, now, {(face, seq)})
            return True
        entry.downstream.add((face, seq))
        return False

    def pit_consume(self, name: ChunkName, now: int = 0) -> set:
        """Remove the entry and return its (face, seq) pairs; empty if none was live."""
        entry = self._live_entry(name, now)
        if entry is None:
            return set()
        del self.pit[name]
        return entry.downstream

    # FIB

    def fib_add(self, entry: FibEntry):
        entries = self.fib.setdefault(entry.prefix, [])
        entries.append(entry)
        entries.sort(key=lambda e: (e.rank, e.next_hop))

    def fib_next_hop(self, prefix: NodeId) -> NodeId:
        entries = self.fib.get(prefix)
        if not entries:
            raise NoRoute(f"node {self.id} has no route to prefix {prefix}")
        return entries[0].next_hop

    def fib_rank(self, prefix: NodeId) -> int:
        entries = self.fib.get(prefix)
        if not entries:
            raise NoRoute(f"node {self.id} has no route to prefix {prefix}")
        return entries[0].rank


def split_faces(downstream) -> tuple[list[int], list[int]]:
    """Split PIT downstream pairs into (sorted neighbor faces, sorted local seqs)."""
    faces = sorted({face for face, _ in downstream if face != LOCAL_APP})
    local = sorted(seq for face, seq in downstream if face == LOCAL_APP)
    return faces, local
