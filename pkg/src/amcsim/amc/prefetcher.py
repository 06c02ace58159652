"""The access-to-miss correlation prefetcher.

Recording: L2 misses outside the target array are bound to the most recent
target access (the "window") and stored, compressed, in the recording buffer.
Replay: frontier progress stages last iteration's entries into a small FIFO
cache; a target access looks that cache up and returns the decompressed misses
as L2 prefetch candidates.
"""

from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

from ..core import Region, RegionDescriptor
from .compression import CompressedEntry, compress, decompress
from .storage import IndexEntry, IndexIdentifier, MetadataStore

logger = logging.getLogger(__name__)

MAX_MISSES_PER_ENTRY = 20
AMC_CACHE_BYTES = 24 * 1024
AMC_CACHE_ENTRIES = 100


class AmcConfigError(RuntimeError):
    pass


@dataclass(frozen=True)
class AmcConfig:
    max_misses_per_entry: int = MAX_MISSES_PER_ENTRY
    cache_bytes: Optional[int] = AMC_CACHE_BYTES  # None: unbounded
    cache_entries: Optional[int] = AMC_CACHE_ENTRIES
    identifier_entries: int = 100
    frontier_entries: int = 100
    # "any": a tag hits when either of its trigger deltas equals either delta in
    # the target recorder. "latest": only the newest deltas are compared.
    lookup: str = "any"
    consume_on_hit: bool = False

    def __post_init__(self):
        if self.lookup not in ("any", "latest"):
            raise ValueError(f"lookup must be 'any' or 'latest', got {self.lookup!r}")
        if not 1 <= self.max_misses_per_entry <= 31:
            raise ValueError("max_misses_per_entry must fit the 5-bit count field")


class TargetRecorder:
    def __init__(self):
        self.recent: list = []
        self.access_count = 0

    def push(self, delta: int) -> None:
        self.recent.append(delta)
        if len(self.recent) > 2:
            del self.recent[0]
        self.access_count += 1

    def snapshot(self) -> tuple:
        return tuple(self.recent)

    def reset(self) -> None:
        self.recent = []
        self.access_count = 0


class FrontierBuffer:
    """Recent frontier deltas. Probes start once two accesses are live; the
    first one is then probed late rather than dropped."""

    def __init__(self, capacity: int = 100):
        self.deltas: deque = deque(maxlen=capacity)
        self.pending: list = []
        self.seen = 0

    def push(self, delta: int) -> list:
        self.deltas.append(delta)
        self.pending.append(delta)
        self.seen += 1
        if self.seen < 2:
            return []
        out, self.pending = self.pending, []
        return out

    def reset(self) -> None:
        self.deltas.clear()
        self.pending = []
        self.seen = 0


@dataclass
class CorrelationEntry:
    trigger: tuple
    window_count: int
    misses: list = field(default_factory=list)


class Binder:
    """Builds correlation entries from misses tagged with the target access count."""

    def __init__(self, store: MetadataStore, cap: int = MAX_MISSES_PER_ENTRY):
        self.store = store
        self.cap = cap
        self.open: Optional[CorrelationEntry] = None
        self._window = None
        self._window_seen: set = set()
        self.window_sizes: Counter = Counter()
        self.mode_histogram: Counter = Counter()
        self.count_histogram: Counter = Counter()
        self.recorded_blocks: set = set()

    @property
    def miss_count_register(self) -> int:
        return len(self.open.misses) if self.open else 0

    def _finalize(self) -> None:
        e = self.open
        self.open = None
        if e is None or not e.misses:
            return
        c = compress(e.misses)
        self.store.append(e.trigger, c)
        self.mode_histogram[c.mode.name] += 1
        self.count_histogram[c.count] += 1

    def _close_window(self) -> None:
        self._finalize()
        if self._window is not None and self._window_seen:
            self.window_sizes[len(self._window_seen)] += 1
        self._window = None
        self._window_seen = set()

    def advance(self, window: int) -> None:
        if self._window is not None and self._window != window:
            self._close_window()

    def add(self, block: int, window: int, trigger: tuple) -> None:
        if self._window != window:
            self._close_window()
            self._window = window
        if block in self._window_seen:
            return
        self._window_seen.add(block)
        self.recorded_blocks.add(block)
        if self.open is not None and len(self.open.misses) >= self.cap:
            self._finalize()
        if self.open is None:
            self.open = CorrelationEntry(trigger, window)
        self.open.misses.append(block)

    def flush(self) -> None:
        self._close_window()


@dataclass
class CachedEntry:
    seq: int
    trigger: tuple
    entry: CompressedEntry
    nbytes: int
    valid: bool = True


class AmcCache:
    """CAM-tagged FIFO of compressed correlation entries."""

    def __init__(self, max_entries: Optional[int] = AMC_CACHE_ENTRIES, max_bytes: Optional[int] = AMC_CACHE_BYTES):
        self.max_entries = max_entries
        self.max_bytes = max_bytes
        self.fifo: deque = deque()
        self.bytes_used = 0
        self.peak_bytes = 0
        self.evictions = 0
        self._seq = 0
        self._by_delta: dict = {}

    def __len__(self) -> int:
        return len(self.fifo)

    def _evict(self) -> None:
        old = self.fifo.popleft()
        self.bytes_used -= old.nbytes
        self.evictions += 1
        self._unindex(old)

    def _unindex(self, ce: CachedEntry) -> None:
        for d in set(ce.trigger):
            lst = self._by_delta.get(d)
            if lst is not None:
                lst.remove(ce)
                if not lst:
                    del self._by_delta[d]

    def insert(self, idx: IndexEntry, entry: CompressedEntry) -> None:
        nbytes = entry.nbytes
        if self.max_bytes is not None and nbytes > self.max_bytes:
            return
        while self.fifo and (
            (self.max_entries is not None and len(self.fifo) >= self.max_entries)
            or (self.max_bytes is not None and self.bytes_used + nbytes > self.max_bytes)
        ):
            self._evict()
        ce = CachedEntry(self._seq, idx.trigger, entry, nbytes)
        self._seq += 1
        self.fifo.append(ce)
        self.bytes_used += nbytes
        self.peak_bytes = max(self.peak_bytes, self.bytes_used)
        for d in set(idx.trigger):
            self._by_delta.setdefault(d, []).append(ce)

    def lookup(self, recent: tuple, mode: str = "any") -> list:
        """Matching entries: full trigger-pair matches first, then FIFO order."""
        if not recent:
            return []
        if mode == "latest":
            found = [ce for ce in self._by_delta.get(recent[-1], ()) if ce.trigger[-1] == recent[-1]]
        else:
            seen = {}
            for d in set(recent):
                for ce in self._by_delta.get(d, ()):
                    seen[ce.seq] = ce
            found = list(seen.values())
        found.sort(key=lambda ce: (ce.trigger != recent, ce.seq))
        return found

    def remove(self, ce: CachedEntry) -> None:
        self.fifo.remove(ce)
        self.bytes_used -= ce.nbytes
        self._unindex(ce)

    def invalidate(self) -> None:
        self.fifo.clear()
        self._by_delta.clear()
        self.bytes_used = 0


@dataclass
class PhaseFlags:
    prefetch_enabled: bool = False
    asid: int = 0
    miss_count_register: int = 0


@dataclass
class AccessResult:
    candidates: list
    staged: int = 0


class AmcPrefetcher:
    def __init__(self, config: AmcConfig = AmcConfig(), record_history: bool = False):
        self.config = config
        self.record_history = record_history
        self.initialized = False
        self._reset_state()

    def _reset_state(self) -> None:
        cfg = self.config
        self.store = MetadataStore()
        self.binder = Binder(self.store, cfg.max_misses_per_entry)
        self.recorder = TargetRecorder()
        self.frontier_buffer = FrontierBuffer(cfg.frontier_entries)
        self.identifier = IndexIdentifier(cfg.identifier_entries)
        self.cache = AmcCache(cfg.cache_entries, cfg.cache_bytes)
        self.flags = PhaseFlags(asid=getattr(self, "flags", PhaseFlags()).asid)
        self.target: Optional[RegionDescriptor] = None
        self.frontier: Optional[RegionDescriptor] = None
        self.lookups = 0
        self.lookup_hits = 0
        self.candidates_generated = 0
        self.staged_entries = 0
        self.dropped_untriggered = 0
        self.iteration = 1
        self.history: list = []
        self._iter_candidates: set = set()

    # -- directives -----------------------------------------------------------

    def init(self, asid: int = 0) -> None:
        self._reset_state()
        self.flags.asid = asid
        self.initialized = True

    def set_target(self, region: RegionDescriptor) -> None:
        self.target = region

    def set_frontier(self, region: RegionDescriptor) -> None:
        self.frontier = region

    def _require_init(self) -> None:
        if not self.initialized:
            raise AmcConfigError("AMC used before init()")

    def on_update(self) -> None:
        self._require_init()
        self.binder.flush()
        if self.record_history:
            self.history.append({
                "candidates": self._iter_candidates,
                "recorded": self.binder.recorded_blocks,
            })
        self._iter_candidates = set()
        self.binder.recorded_blocks = set()
        self.store.swap()
        self.flags.prefetch_enabled = True
        self.recorder.reset()
        self.frontier_buffer.reset()
        self.identifier.reset()
        self.cache.invalidate()
        self.iteration += 1

    def reset(self) -> None:
        """Context-switch reset: drop metadata and restart from recording."""
        asid = self.flags.asid
        target, frontier = self.target, self.frontier
        self._reset_state()
        self.flags.asid = asid
        self.target, self.frontier = target, frontier

    def on_end(self) -> dict:
        self._require_init()
        self.binder.flush()
        if self.record_history:
            self.history.append({"candidates": self._iter_candidates, "recorded": self.binder.recorded_blocks})
        stats = self.statistics()
        self.store.release()
        self.cache.invalidate()
        self.initialized = False
        return stats

    def statistics(self) -> dict:
        s = self.store
        return {
            "entries_recorded": s.entries_recorded,
            "metadata_bytes_written": s.bytes_written,
            "metadata_bytes_read": s.bytes_read,
            "metadata_lines_written": s.lines_written,
            "metadata_lines_read": s.lines_read,
            "peak_metadata_bytes": s.peak_bytes,
            "mode_histogram": dict(self.binder.mode_histogram),
            "miss_count_histogram": dict(self.binder.count_histogram),
            "window_size_histogram": dict(self.binder.window_sizes),
            "lookups": self.lookups,
            "lookup_hits": self.lookup_hits,
            "candidates_generated": self.candidates_generated,
            "staged_entries": self.staged_entries,
            "amc_cache_evictions": self.cache.evictions,
            "amc_cache_peak_bytes": self.cache.peak_bytes,
            "dropped_untriggered_misses": self.dropped_untriggered,
        }

    # -- accesses -------------------------------------------------------------

    def on_l1_access(self, vaddr: int, region: Region) -> AccessResult:
        self._require_init()
        if region is Region.TARGET:
            return self._target_access(vaddr)
        if region is Region.FRONTIER:
            return self._frontier_access(vaddr)
        return AccessResult([])

    def _target_access(self, vaddr: int) -> AccessResult:
        if self.target is None or self.frontier is None:
            raise AmcConfigError("target access before AddrTBase/AddrFBase")
        delta = self.target.delta(vaddr)
        rec = self.recorder
        rec.push(delta)
        self.binder.advance(rec.access_count)
        if not self.flags.prefetch_enabled:
            return AccessResult([])
        self.lookups += 1
        recent = rec.snapshot()
        matched = self.cache.lookup(recent, self.config.lookup)
        if not matched:
            return AccessResult([])
        self.lookup_hits += 1
        candidates = []
        seen = set()
        for ce in matched:
            for block in decompress(ce.entry):
                if block not in seen:
                    seen.add(block)
                    candidates.append(block)
            if self.config.consume_on_hit:
                self.cache.remove(ce)
        self.candidates_generated += len(candidates)
        if self.record_history:
            self._iter_candidates.update(candidates)
        return AccessResult(candidates)

    def _frontier_access(self, vaddr: int) -> AccessResult:
        if self.target is None or self.frontier is None:
            raise AmcConfigError("frontier access before AddrTBase/AddrFBase")
        fdelta = self.frontier.delta(vaddr)
        probes = self.frontier_buffer.push(fdelta)
        if not self.flags.prefetch_enabled:
            return AccessResult([])
        staged = 0
        for fd in probes:
            td = self.target_delta(fd)
            for idx in self.identifier.probe(td, self.store):
                self.cache.insert(idx, self.store.read_entry(idx))
                staged += 1
        self.staged_entries += staged
        return AccessResult([], staged)

    def target_delta(self, frontier_delta: int) -> int:
        return frontier_delta * self.target.element_size // self.frontier.element_size

    def on_prefetch_hit(self, block: int, is_target_region: bool) -> None:
        """First demand use of a line AMC prefetched.

        Replay removed the miss, so it is recorded as one; otherwise a
        correctly prefetched stream would vanish from the next iteration's
        metadata.
        """
        self.on_l2_miss(block, is_target_region)

    def on_l2_miss(self, block: int, is_target_region: bool) -> None:
        self._require_init()
        if is_target_region:
            return
        rec = self.recorder
        if rec.access_count == 0:
            self.dropped_untriggered += 1
            return
        self.binder.add(block, rec.access_count, rec.snapshot())
        self.flags.miss_count_register = self.binder.miss_count_register
