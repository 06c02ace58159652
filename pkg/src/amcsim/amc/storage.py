"""Off-chip AMC metadata: double-buffered miss-address and index regions."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from ..core import BLOCK_SIZE
from .compression import CompressedEntry, Mode

INDEX_ENTRY_BYTES = 16


@dataclass(frozen=True)
class IndexEntry:
    trigger: tuple  # one or two element-aligned target deltas, oldest first
    mode: Mode
    miss_count: int
    miss_offset: int

    @property
    def latest(self) -> int:
        return self.trigger[-1]

    def to_json(self) -> dict:
        return {
            "trigger": list(self.trigger),
            "mode": int(self.mode),
            "miss_count": self.miss_count,
            "miss_offset": self.miss_offset,
        }


@dataclass
class MetadataBuffer:
    miss_region: bytearray = field(default_factory=bytearray)
    index_region: list = field(default_factory=list)

    @property
    def tail_offset(self) -> int:
        return len(self.miss_region)

    @property
    def nbytes(self) -> int:
        return len(self.miss_region) + INDEX_ENTRY_BYTES * len(self.index_region)

    def clear(self) -> None:
        self.miss_region = bytearray()
        self.index_region = []


class MetadataStore:
    """Two buffers whose recording/prefetching roles swap at every Update.

    Traffic is tracked in bytes and in 64B lines. Writes are append-only
    streams, so a partially written line is charged once when first touched.
    Reads go through a one-line stream buffer per region: consecutive reads
    that stay in the last fetched line are not charged again.
    """

    def __init__(self):
        self.buffers = (MetadataBuffer(), MetadataBuffer())
        self._rec = 0
        self.bytes_written = 0
        self.bytes_read = 0
        self.lines_written = 0
        self.lines_read = 0
        self.peak_bytes = 0
        self.entries_recorded = 0
        self._last_line = {"index": None, "miss": None}

    def _charge_read(self, region: str, start: int, end: int) -> None:
        if end <= start:
            return
        first, last = start // BLOCK_SIZE, (end - 1) // BLOCK_SIZE
        n = last - first + 1
        if self._last_line[region] == first:
            n -= 1
        self.lines_read += n
        self._last_line[region] = last

    @property
    def recording(self) -> MetadataBuffer:
        return self.buffers[self._rec]

    @property
    def prefetching(self) -> MetadataBuffer:
        return self.buffers[1 - self._rec]

    @property
    def nbytes(self) -> int:
        return self.buffers[0].nbytes + self.buffers[1].nbytes

    def append(self, trigger: tuple, entry: CompressedEntry) -> IndexEntry:
        buf = self.recording
        payload = entry.to_bytes()
        old = buf.tail_offset
        buf.miss_region += payload
        idx = IndexEntry(tuple(trigger), entry.mode, entry.count, old)
        n = len(buf.index_region)
        buf.index_region.append(idx)
        self.bytes_written += len(payload) + INDEX_ENTRY_BYTES
        self.lines_written += _new_lines(old, buf.tail_offset)
        self.lines_written += _new_lines(n * INDEX_ENTRY_BYTES, (n + 1) * INDEX_ENTRY_BYTES)
        self.entries_recorded += 1
        self.peak_bytes = max(self.peak_bytes, self.nbytes)
        return idx

    def read_index(self, start: int, count: int) -> list:
        entries = self.prefetching.index_region[start:start + count]
        if entries:
            end = start + len(entries)
            self.bytes_read += len(entries) * INDEX_ENTRY_BYTES
            self._charge_read("index", start * INDEX_ENTRY_BYTES, end * INDEX_ENTRY_BYTES)
        return entries

    def read_entry(self, idx: IndexEntry) -> CompressedEntry:
        from .compression import compressed_bits

        nbytes = (compressed_bits(idx.mode, idx.miss_count) + 7) // 8
        region = self.prefetching.miss_region
        if idx.miss_offset + nbytes > len(region):
            raise ValueError("index entry points past the miss-region tail")
        data = bytes(region[idx.miss_offset:idx.miss_offset + nbytes])
        self.bytes_read += nbytes
        self._charge_read("miss", idx.miss_offset, idx.miss_offset + nbytes)
        return CompressedEntry.from_bytes(data, idx.mode, idx.miss_count)

    def swap(self) -> None:
        self._rec = 1 - self._rec
        self.recording.clear()
        self._last_line = {"index": None, "miss": None}

    def release(self) -> None:
        for b in self.buffers:
            b.clear()

    def dump(self, directory: Union[str, Path], which: str = "prefetching") -> None:
        """Write the index as JSON lines, the miss region as raw bytes, and a
        sidecar listing each entry's byte range."""
        buf = self.prefetching if which == "prefetching" else self.recording
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "index.jsonl").write_text("".join(json.dumps(e.to_json()) + "\n" for e in buf.index_region))
        (d / "misses.bin").write_bytes(bytes(buf.miss_region))
        from .compression import compressed_bits

        offsets = [
            {"offset": e.miss_offset, "nbytes": (compressed_bits(e.mode, e.miss_count) + 7) // 8}
            for e in buf.index_region
        ]
        (d / "misses.offsets.json").write_text(json.dumps(offsets))


def _new_lines(old: int, new: int) -> int:
    return -(-new // BLOCK_SIZE) - -(-old // BLOCK_SIZE)


class IndexIdentifier:
    """On-chip window over the prefetching index, advanced by frontier progress."""

    def __init__(self, capacity: int = 100):
        self.capacity = capacity
        self.window: deque = deque()
        self.cursor = 0
        self.refills = 0

    def reset(self) -> None:
        self.window.clear()
        self.cursor = 0

    def _refill(self, store: MetadataStore) -> bool:
        self.window.clear()
        batch = store.read_index(self.cursor, self.capacity)
        self.cursor += len(batch)
        self.window.extend(batch)
        if batch:
            self.refills += 1
        return bool(batch)

    def probe(self, target_delta: int, store: MetadataStore) -> list:
        """Return the index entries to stage for ``target_delta`` (possibly none).

        A hit drops every window entry up to and including the last match.
        A miss past the window's last trigger pulls in the next batch.
        """
        if not self.window and not self._refill(store):
            return []
        while True:
            last = -1
            for i, e in enumerate(self.window):
                if e.trigger[-1] == target_delta:
                    last = i
            if last >= 0:
                hits = [e for i, e in enumerate(self.window) if i <= last and e.trigger[-1] == target_delta]
                for _ in range(last + 1):
                    self.window.popleft()
                if not self.window:
                    self._refill(store)
                return hits
            if target_delta > self.window[-1].trigger[-1]:
                if not self._refill(store):
                    return []
                continue
            return []
