"""Two-level set-associative cache model with a flat memory backend.

The clock is scalar: every demand access advances it by its full path latency.
Prefetches are issued into an in-flight queue capped at the L2 MSHR count and
land in L2 with a prefetched bit that records which prefetcher asked for them.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict, defaultdict
from dataclasses import dataclass, fields
from typing import Optional

from .core import BLOCK_SIZE

L1 = "L1"
L2 = "L2"
L3 = "L3"
MEMORY = "Memory"


@dataclass(frozen=True)
class CacheConfig:
    capacity_bytes: int
    associativity: int
    hit_latency: int
    block_size: int = BLOCK_SIZE
    policy: str = "lru"

    def __post_init__(self):
        if self.block_size != BLOCK_SIZE:
            raise ValueError(f"block_size must be {BLOCK_SIZE}")
        if self.associativity <= 0 or self.capacity_bytes <= 0:
            raise ValueError("capacity and associativity must be positive")
        if self.capacity_bytes % (self.associativity * self.block_size):
            raise ValueError("capacity must be divisible by associativity * block_size")
        n = self.num_sets
        if n & (n - 1):
            raise ValueError(f"set count {n} is not a power of two")
        if self.policy not in ("lru", "fifo"):
            raise ValueError(f"unknown replacement policy {self.policy!r}")

    @property
    def num_sets(self) -> int:
        return self.capacity_bytes // (self.associativity * self.block_size)


L1D_DEFAULT = CacheConfig(64 * 1024, 8, 4)
L2_DEFAULT = CacheConfig(256 * 1024, 8, 12)


@dataclass(frozen=True)
class HierarchyConfig:
    l1: CacheConfig = L1D_DEFAULT
    l2: CacheConfig = L2_DEFAULT
    l3: Optional[CacheConfig] = None
    memory_latency: int = 200
    mshr: int = 16
    # Requests that find every MSHR busy wait here (FIFO) instead of being
    # dropped. 0 means drop immediately.
    prefetch_queue: int = 0

    def __post_init__(self):
        if self.memory_latency <= 0:
            raise ValueError("memory_latency must be positive")
        if self.mshr <= 0:
            raise ValueError("mshr must be positive")
        if self.prefetch_queue < 0:
            raise ValueError("prefetch_queue must be >= 0")


@dataclass
class AccessOutcome:
    level_hit: str
    latency_cycles: int
    l2_miss_block: Optional[int] = None
    was_prefetched_hit: bool = False
    was_late_prefetch_hit: bool = False
    prefetch_source: Optional[str] = None


@dataclass
class InFlightPrefetch:
    block: int
    issue_cycle: int
    ready_cycle: int
    source: str


@dataclass
class PrefetchStats:
    issued: int = 0
    rejected: int = 0
    dropped: int = 0
    useful: int = 0
    useful_late: int = 0
    evicted_unused: int = 0
    never_used: int = 0

    @property
    def filled(self) -> int:
        return self.issued

    def outcomes(self) -> dict:
        return {
            "useful": self.useful,
            "useful_late": self.useful_late,
            "evicted_unused": self.evicted_unused,
            "never_used": self.never_used,
        }

    def copy(self) -> "PrefetchStats":
        return PrefetchStats(**{f.name: getattr(self, f.name) for f in fields(self)})

    def __add__(self, other: "PrefetchStats") -> "PrefetchStats":
        return PrefetchStats(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def __sub__(self, other: "PrefetchStats") -> "PrefetchStats":
        return PrefetchStats(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})


class CacheLevel:
    """One set-associative level. Each set maps block -> prefetch source (None
    once demand has touched the line)."""

    def __init__(self, config: CacheConfig, name: str):
        self.config = config
        self.name = name
        self.mask = config.num_sets - 1
        self.ways = config.associativity
        self.lru = config.policy == "lru"
        self.sets: list[OrderedDict] = [OrderedDict() for _ in range(config.num_sets)]

    def __contains__(self, block: int) -> bool:
        return block in self.sets[block & self.mask]

    def touch(self, block: int) -> bool:
        s = self.sets[block & self.mask]
        if block in s:
            if self.lru:
                s.move_to_end(block)
            return True
        return False

    def fill(self, block: int, source: Optional[str] = None):
        """Insert ``block``; returns the evicted (block, source) pair if any."""
        s = self.sets[block & self.mask]
        victim = None
        if block in s:
            s.move_to_end(block)
            s[block] = source
            return None
        if len(s) >= self.ways:
            victim = s.popitem(last=False)
        s[block] = source
        return victim

    def prefetched_source(self, block: int) -> Optional[str]:
        return self.sets[block & self.mask].get(block)

    def clear_prefetched(self, block: int) -> None:
        self.sets[block & self.mask][block] = None

    def resident_prefetched(self):
        for s in self.sets:
            for block, src in s.items():
                if src is not None:
                    yield block, src

    def flush(self) -> None:
        for s in self.sets:
            s.clear()


class Hierarchy:
    """Non-inclusive L1D/L2 (optional L3) hierarchy with prefetch insertion at L2."""

    def __init__(self, config: HierarchyConfig = HierarchyConfig()):
        self.config = config
        self.l1 = CacheLevel(config.l1, L1)
        self.l2 = CacheLevel(config.l2, L2)
        self.l3 = CacheLevel(config.l3, L3) if config.l3 else None
        self.clock = 0
        self.total_latency = 0
        self.inflight: dict[int, InFlightPrefetch] = {}
        self._ready: list[tuple[int, int]] = []
        self.pending: OrderedDict = OrderedDict()
        self.stats: dict[str, PrefetchStats] = defaultdict(PrefetchStats)
        self.demand_accesses = 0
        self.demand_misses = 0
        self.level_hits = {L1: 0, L2: 0, L3: 0, MEMORY: 0}
        self.prefetch_dram = 0

    # -- prefetch queue -------------------------------------------------------

    def _fill_l2(self, block: int, source: Optional[str]) -> None:
        victim = self.l2.fill(block, source)
        if victim is not None and victim[1] is not None:
            self.stats[victim[1]].evicted_unused += 1

    def _drain(self, now: Optional[int]) -> None:
        ready = self._ready
        while ready and (now is None or ready[0][0] <= now):
            cycle, block = heapq.heappop(ready)
            pf = self.inflight.get(block)
            if pf is None or pf.ready_cycle != cycle:
                continue  # consumed by a late demand hit (maybe re-issued since)
            del self.inflight[block]
            self._fill_l2(block, pf.source)
            if self.pending:
                b, src = self.pending.popitem(last=False)
                self._launch(b, src, cycle)
        if now is None:
            while self.pending:
                b, src = self.pending.popitem(last=False)
                self._launch(b, src, self.clock)
                self._drain(None)

    def _launch(self, block: int, source: str, cycle: int) -> None:
        ready = cycle + self.config.memory_latency
        self.inflight[block] = InFlightPrefetch(block, cycle, ready, source)
        heapq.heappush(self._ready, (ready, block))
        self.stats[source].issued += 1
        self.prefetch_dram += 1

    def issue_prefetch(self, block: int, source: str = "prefetch") -> bool:
        """Accepted means launched or queued. Queued requests count as
        issued (and as DRAM traffic) only once they launch."""
        self._drain(self.clock)
        st = self.stats[source]
        if block in self.l2 or block in self.inflight or block in self.pending:
            st.rejected += 1
            return False
        if len(self.inflight) >= self.config.mshr:
            if len(self.pending) < self.config.prefetch_queue:
                self.pending[block] = source
                return True
            st.dropped += 1
            return False
        self._launch(block, source, self.clock)
        return True

    # -- demand path --------------------------------------------------------------

    def demand_access(self, block: int, kind: str = "load", miss_hint: bool = False) -> AccessOutcome:
        now = self.clock
        self._drain(now)
        cfg = self.config
        self.demand_accesses += 1
        if self.l1.touch(block):
            out = AccessOutcome(L1, cfg.l1.hit_latency)
            self.level_hits[L1] += 1
            self.clock += out.latency_cycles
            self.total_latency += out.latency_cycles
            return out
        if block in self.pending:
            # demand got there first; the queued request is cancelled
            del self.pending[block]
        if block in self.inflight:
            pf = self.inflight.pop(block)
            self.stats[pf.source].useful_late += 1
            residual = pf.ready_cycle - now
            self._fill_l2(block, None)
            self.l1.fill(block)
            out = AccessOutcome(
                L2, cfg.l1.hit_latency + cfg.l2.hit_latency + residual,
                was_late_prefetch_hit=True, prefetch_source=pf.source,
            )
        elif self.l2.touch(block):
            src = self.l2.prefetched_source(block)
            if src is not None:
                self.stats[src].useful += 1
                self.l2.clear_prefetched(block)
            self.l1.fill(block)
            out = AccessOutcome(
                L2, cfg.l1.hit_latency + cfg.l2.hit_latency,
                was_prefetched_hit=src is not None, prefetch_source=src,
            )
        elif self.l3 is not None and self.l3.touch(block):
            self._fill_l2(block, None)
            self.l1.fill(block)
            out = AccessOutcome(L3, cfg.l1.hit_latency + cfg.l2.hit_latency + cfg.l3.hit_latency, l2_miss_block=block)
        else:
            lat = cfg.l1.hit_latency + cfg.l2.hit_latency + cfg.memory_latency
            if self.l3 is not None:
                lat += cfg.l3.hit_latency
                self.l3.fill(block)
            self._fill_l2(block, None)
            self.l1.fill(block)
            self.demand_misses += 1
            out = AccessOutcome(MEMORY, lat, l2_miss_block=block)
        self.level_hits[out.level_hit] += 1
        self.clock += out.latency_cycles
        self.total_latency += out.latency_cycles
        return out

    @property
    def demand_dram(self) -> int:
        return self.demand_misses

    def finish(self) -> None:
        """Land every in-flight prefetch and count resident unused ones."""
        self._drain(None)
        for _, src in self.l2.resident_prefetched():
            self.stats[src].never_used += 1
        for s in self.l2.sets:
            for block in s:
                s[block] = None

    def classify_prefetch_outcomes(self, source: Optional[str] = None) -> dict:
        """Outcome classes for one prefetch source, or summed over all of them.
        Call after :meth:`finish`."""
        if source is not None:
            return self.stats[source].outcomes() if source in self.stats else PrefetchStats().outcomes()
        total = PrefetchStats()
        for st in self.stats.values():
            for k, v in st.outcomes().items():
                setattr(total, k, getattr(total, k) + v)
        return total.outcomes()


class FlaggedMissModel:
    """Memory model for hand-annotated traces.

    An access misses iff its trace record carries the miss flag, mirroring a
    worked example where the annotation, not a cache, decides what misses.
    Prefetched blocks are held as one-shot tokens: a flagged access to a block
    with a token is a covered miss and consumes it. Tokens land immediately,
    so nothing is ever late.
    """

    def __init__(self, config: HierarchyConfig = HierarchyConfig()):
        self.config = config
        self.clock = 0
        self.total_latency = 0
        self.tokens: dict[int, str] = {}
        self.stats: dict[str, PrefetchStats] = defaultdict(PrefetchStats)
        self.demand_accesses = 0
        self.demand_misses = 0
        self.level_hits = {L1: 0, L2: 0, L3: 0, MEMORY: 0}
        self.prefetch_dram = 0

    def issue_prefetch(self, block: int, source: str = "prefetch") -> bool:
        st = self.stats[source]
        if block in self.tokens:
            st.rejected += 1
            return False
        self.tokens[block] = source
        st.issued += 1
        self.prefetch_dram += 1
        return True

    def demand_access(self, block: int, kind: str = "load", miss_hint: bool = False) -> AccessOutcome:
        cfg = self.config
        self.demand_accesses += 1
        if not miss_hint:
            out = AccessOutcome(L1, cfg.l1.hit_latency)
        elif block in self.tokens:
            src = self.tokens.pop(block)
            self.stats[src].useful += 1
            out = AccessOutcome(L2, cfg.l1.hit_latency + cfg.l2.hit_latency, was_prefetched_hit=True, prefetch_source=src)
        else:
            self.demand_misses += 1
            out = AccessOutcome(MEMORY, cfg.l1.hit_latency + cfg.l2.hit_latency + cfg.memory_latency, l2_miss_block=block)
        self.level_hits[out.level_hit] += 1
        self.clock += out.latency_cycles
        self.total_latency += out.latency_cycles
        return out

    @property
    def demand_dram(self) -> int:
        return self.demand_misses

    def finish(self) -> None:
        for src in self.tokens.values():
            self.stats[src].never_used += 1
        self.tokens.clear()

    classify_prefetch_outcomes = Hierarchy.classify_prefetch_outcomes
