"""Content Store and its replacement policies.

All contents occupy a single slot, so capacities are counted in items.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional


class CachePolicy(str, Enum):
    LRU = "lru"
    FIFO = "fifo"
    LFU = "lfu"
    COST = "cost"


@dataclass
class CacheEntry:
    last_access: float
    hits: int
    admitted_at: float


@dataclass(frozen=True)
class RetrievalCostEstimate:
    content: int
    popularity: float
    requester_affinity: float
    est_time: float

    @property
    def cost(self) -> float:
        return self.est_time * (1.0 - self.popularity * self.requester_affinity)


def estimate_retrieval_cost(c: int, pop: float, affinity: float, est_time: float) -> RetrievalCostEstimate:
    """Expected cost of fetching ``c`` again if it is not kept locally.

    Cheap-to-refetch or unlikely-to-be-requested contents score low and are
    the first candidates for eviction.
    """
    if not 0.0 <= pop <= 1.0:
        raise ValueError(f"popularity must be in [0, 1], got {pop}")
    if not 0.0 <= affinity <= 1.0:
        raise ValueError(f"affinity must be in [0, 1], got {affinity}")
    if est_time < 0:
        raise ValueError(f"est_time must be >= 0, got {est_time}")
    return RetrievalCostEstimate(c, pop, affinity, est_time)


CostFn = Callable[[int], float]


class ContentStore:
    """Fixed-capacity content cache keyed by content index."""

    def __init__(self, capacity: int, policy: CachePolicy | str = CachePolicy.LRU,
                 cost: Optional[CostFn] = None):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self.policy = CachePolicy(policy)
        self.cost = cost
        self.entries: dict[int, CacheEntry] = {}

    def __contains__(self, c: int) -> bool:
        return c in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))

    def __repr__(self) -> str:
        return f"ContentStore(capacity={self.capacity}, policy={self.policy.value}, items={sorted(self.entries)})"

    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def lookup(self, c: int, now: float) -> bool:
        entry = self.entries.get(c)
        if entry is None:
            return False
        entry.last_access = now
        entry.hits += 1
        return True

    def _score(self, c: int, policy: CachePolicy) -> tuple:
        e = self.entries[c]
        if policy is CachePolicy.LRU:
            return (e.last_access, c)
        if policy is CachePolicy.FIFO:
            return (e.admitted_at, c)
        if policy is CachePolicy.LFU:
            return (e.hits, c)
        return (self._cost(c), c)

    def _cost(self, c: int) -> float:
        if self.cost is None:
            raise ValueError("cost-aware policy needs a cost function")
        return self.cost(c)

    def victim(self, policy: CachePolicy | None = None) -> Optional[int]:
        if not self.entries:
            return None
        policy = self.policy if policy is None else CachePolicy(policy)
        return min(self.entries, key=lambda c: self._score(c, policy))

    def admit(self, c: int, now: float, policy: CachePolicy | str | None = None) -> Optional[int]:
        """Insert ``c``; return the evicted content, if any.

        A cost-aware store refuses ``c`` when it would itself be the cheapest
        item; callers detect that with ``c not in store``.
        """
        if self.capacity == 0:
            return None
        policy = self.policy if policy is None else CachePolicy(policy)
        if c in self.entries:
            self.entries[c].last_access = now
            return None
        evicted = None
        if len(self.entries) >= self.capacity:
            evicted = self.victim(policy)
            if policy is CachePolicy.COST and (self._cost(c), c) < self._score(evicted, policy):
                return None
            del self.entries[evicted]
        self.entries[c] = CacheEntry(last_access=now, hits=0, admitted_at=now)
        return evicted


def cache_lookup(store: ContentStore, c: int, now: float) -> bool:
    return store.lookup(c, now)


def cache_admit(store: ContentStore, c: int, policy: CachePolicy | str, now: float) -> Optional[int]:
    return store.admit(c, now, policy)
