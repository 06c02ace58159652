"""Comparison prefetchers behind one small callback interface.

The engine calls ``on_access`` for every L1 demand access (before the access is
served), ``on_l1_miss`` for accesses that go past L1, ``on_miss`` for every L2
demand miss and ``on_prefetch_hit`` the first time a line this prefetcher
brought in is used. Each returns candidate block addresses, at most ``degree``
of them.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Optional

from .core import MAX_BLOCK


class Prefetcher:
    name = "none"

    def __init__(self, degree: int = 1):
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = degree

    def on_access(self, block: int, pc: Optional[int] = None) -> list:
        return []

    def on_l1_miss(self, block: int, pc: Optional[int] = None) -> None:
        pass

    def on_miss(self, block: int, pc: Optional[int] = None) -> list:
        return []

    def on_prefetch_hit(self, block: int, pc: Optional[int] = None) -> list:
        return []

    def on_update(self) -> None:
        pass

    @property
    def metadata_lines(self) -> int:
        """64B off-chip metadata transfers so far."""
        return 0


class NextLine(Prefetcher):
    """Tagged next-line: fires on a miss and on first use of its own prefetch."""

    name = "next_line"

    def _next(self, block: int) -> list:
        out = []
        for i in range(1, self.degree + 1):
            if block + i > MAX_BLOCK:
                break
            out.append(block + i)
        return out

    def on_miss(self, block, pc=None):
        return self._next(block)

    on_prefetch_hit = on_miss


class IpStride(Prefetcher):
    """Per-PC stride detection; issues after two confirmations of a stride."""

    name = "ip_stride"

    def __init__(self, degree: int = 4, table_size: int = 256, confirmations: int = 2):
        super().__init__(degree)
        self.table_size = table_size
        self.confirmations = confirmations
        self.table: OrderedDict = OrderedDict()  # pc -> [last block, stride, confidence]

    def on_access(self, block, pc=None):
        if pc is None:
            return []
        ent = self.table.get(pc)
        if ent is None:
            if len(self.table) >= self.table_size:
                self.table.popitem(last=False)
            self.table[pc] = [block, 0, 0]
            return []
        self.table.move_to_end(pc)
        stride = block - ent[0]
        if stride == 0:
            return []
        if stride == ent[1]:
            ent[2] += 1
        else:
            ent[1], ent[2] = stride, 0
        ent[0] = block
        if ent[2] < self.confirmations:
            return []
        out = []
        for i in range(1, self.degree + 1):
            b = block + i * stride
            if 0 <= b <= MAX_BLOCK:
                out.append(b)
        return out


class Markov(Prefetcher):
    """One-to-one address correlation over the L1 access stream.

    Each block remembers only its latest successor; the table is LRU-bounded.
    With degree > 1 the prediction follows the successor chain.
    """

    name = "markov"

    def __init__(self, degree: int = 1, capacity: int = 1 << 16):
        super().__init__(degree)
        self.capacity = capacity
        self.table: OrderedDict = OrderedDict()
        self.prev: Optional[int] = None

    def train(self, block: int) -> None:
        prev = self.prev
        self.prev = block
        if prev is None or prev == block:
            return
        if prev in self.table:
            self.table.move_to_end(prev)
        elif len(self.table) >= self.capacity:
            self.table.popitem(last=False)
        self.table[prev] = block

    def predict(self, block: int) -> list:
        out = []
        cur = block
        for _ in range(self.degree):
            nxt = self.table.get(cur)
            if nxt is None or nxt == block or nxt in out:
                break
            out.append(nxt)
            cur = nxt
        return out

    def on_access(self, block, pc=None):
        out = self.predict(block)
        if block in self.table:
            self.table.move_to_end(block)
        self.train(block)
        return out


class LineCache:
    """Small LRU cache of 64B metadata lines; counts the misses it takes."""

    def __init__(self, lines: int):
        self.capacity = lines
        self.lines: OrderedDict = OrderedDict()
        self.misses = 0

    def read(self, key) -> None:
        if key in self.lines:
            self.lines.move_to_end(key)
            return
        self.misses += 1
        if self.capacity <= 0:
            return
        if len(self.lines) >= self.capacity:
            self.lines.popitem(last=False)
        self.lines[key] = True


class PcTemporalLite(Prefetcher):
    """PC-localized temporal streams, replayed from the previous iteration.

    Training appends every PC-tagged access that misses L1 to that PC's
    stream. On an L2 miss (or first use of one of its prefetches) the
    prefetcher finds the block's last occurrence in the prior iteration's
    stream for the same PC and returns the next ``degree`` blocks, skipping
    the trigger itself.

    Streams live off-chip at ``entry_bytes`` per entry. Appends are written
    back one full line at a time; lookups read the block's mapping line and
    the stream lines they cover through an on-chip cache of
    ``metadata_cache_lines`` lines.
    """

    name = "pc_temporal_lite"

    def __init__(self, degree: int = 1, capacity: int = 1 << 16,
                 metadata_cache_lines: int = 32, entry_bytes: int = 8):
        super().__init__(degree)
        self.capacity = capacity
        self.entry_bytes = entry_bytes
        self.current: dict = {}
        self.prior: dict = {}
        self._last: dict = {}
        self._epoch = 0
        self.cache = LineCache(metadata_cache_lines)
        self.lines_written = 0

    def on_l1_miss(self, block, pc=None):
        if pc is None:
            return
        stream = self.current.setdefault(pc, [])
        if len(stream) < self.capacity:
            if (len(stream) * self.entry_bytes) % 64 == 0:
                self.lines_written += 1
            stream.append(block)

    def predict(self, pc: Optional[int], block: int) -> list:
        if pc is None:
            return []
        per_line = max(1, 64 // self.entry_bytes)
        self.cache.read(("map", self._epoch, pc, block // per_line))
        pos = self._last.get(pc, {}).get(block)
        if pos is None:
            return []
        stream = self.prior[pc]
        out = []
        i = pos + 1
        while i < len(stream) and len(out) < self.degree:
            self.cache.read(("stream", self._epoch, pc, i // per_line))
            b = stream[i]
            if b != block and b not in out:
                out.append(b)
            i += 1
        return out

    def on_miss(self, block, pc=None):
        return self.predict(pc, block)

    on_prefetch_hit = on_miss

    def on_update(self):
        self.prior, self.current = self.current, {}
        self._epoch += 1
        self._last = {pc: {b: i for i, b in enumerate(s)} for pc, s in self.prior.items()}

    @property
    def metadata_lines(self) -> int:
        return self.lines_written + self.cache.misses


BASELINES = {cls.name: cls for cls in (NextLine, IpStride, Markov, PcTemporalLite)}
DEFAULT_DEGREE = {"next_line": 1, "ip_stride": 4, "markov": 1, "pc_temporal_lite": 1}


def make_baseline(name: str, **params) -> Prefetcher:
    try:
        cls = BASELINES[name]
    except KeyError:
        raise ValueError(f"unknown prefetcher {name!r}") from None
    params.setdefault("degree", DEFAULT_DEGREE[name])
    return cls(**params)
