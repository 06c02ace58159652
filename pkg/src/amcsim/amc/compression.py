"""Base-delta compression of correlated miss streams.

An entry stores the first miss as a 46-bit base followed by one signed delta
per miss (the first is always zero) of 1, 2 or 4 bytes. When no delta width
fits, the misses are stored raw at 46 bits each.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from ..core import BLOCK_ADDR_BITS, MAX_BLOCK

MAX_COUNT = (1 << 5) - 1
UNCOMPRESSED_BITS_PER_MISS = BLOCK_ADDR_BITS


class Mode(enum.IntEnum):
    DELTA1 = 0
    DELTA2 = 1
    DELTA4 = 2
    RAW = 3

    @property
    def delta_bytes(self) -> int:
        return {Mode.DELTA1: 1, Mode.DELTA2: 2, Mode.DELTA4: 4}.get(self, 0)


class CompressionError(ValueError):
    pass


@dataclass(frozen=True)
class CompressedEntry:
    base: int
    mode: Mode
    count: int
    payload: tuple  # deltas for delta modes, raw block addresses for RAW

    @property
    def bits(self) -> int:
        return compressed_bits(self.mode, self.count)

    @property
    def nbytes(self) -> int:
        return (self.bits + 7) // 8

    def to_bytes(self) -> bytes:
        """Little-endian bit packing: base first, then each field in order."""
        if self.mode == Mode.RAW:
            acc, shift = 0, 0
            for addr in self.payload:
                acc |= addr << shift
                shift += BLOCK_ADDR_BITS
        else:
            width = 8 * self.mode.delta_bytes
            mask = (1 << width) - 1
            acc, shift = self.base, BLOCK_ADDR_BITS
            for d in self.payload:
                acc |= (d & mask) << shift
                shift += width
        return acc.to_bytes(self.nbytes, "little")

    @classmethod
    def from_bytes(cls, data: bytes, mode: int, count: int) -> "CompressedEntry":
        mode = _check_header(mode, count)
        need = (compressed_bits(mode, count) + 7) // 8
        if len(data) != need:
            raise CompressionError(f"payload is {len(data)} bytes, expected {need}")
        acc = int.from_bytes(data, "little")
        amask = (1 << BLOCK_ADDR_BITS) - 1
        if mode == Mode.RAW:
            addrs = tuple((acc >> (i * BLOCK_ADDR_BITS)) & amask for i in range(count))
            return cls(addrs[0], mode, count, addrs)
        width = 8 * mode.delta_bytes
        mask = (1 << width) - 1
        sign = 1 << (width - 1)
        base = acc & amask
        deltas = []
        for i in range(count):
            raw = (acc >> (BLOCK_ADDR_BITS + i * width)) & mask
            deltas.append(raw - (1 << width) if raw & sign else raw)
        return cls(base, mode, count, tuple(deltas))


def compressed_bits(mode: Mode, count: int) -> int:
    if mode == Mode.RAW:
        return count * BLOCK_ADDR_BITS
    return BLOCK_ADDR_BITS + count * 8 * Mode(mode).delta_bytes


def uncompressed_bits(count: int) -> int:
    return count * UNCOMPRESSED_BITS_PER_MISS


def _check_header(mode: int, count: int) -> Mode:
    try:
        mode = Mode(mode)
    except ValueError:
        raise CompressionError(f"invalid mode {mode}") from None
    if not 1 <= count <= MAX_COUNT:
        raise CompressionError(f"invalid miss count {count}")
    return mode


def select_mode(misses: Sequence[int]) -> Mode:
    """Smallest delta width that holds every miss relative to the first one."""
    base = misses[0]
    span = max(abs(m - base) for m in misses)
    for mode in (Mode.DELTA1, Mode.DELTA2, Mode.DELTA4):
        if span < 1 << (8 * mode.delta_bytes - 1):
            return mode
    return Mode.RAW


def compress(misses: Sequence[int]) -> CompressedEntry:
    n = len(misses)
    if not 1 <= n <= MAX_COUNT:
        raise CompressionError(f"entry must hold 1..{MAX_COUNT} misses, got {n}")
    for m in misses:
        if not 0 <= m <= MAX_BLOCK:
            raise CompressionError(f"block address {m:#x} exceeds 46 bits")
    mode = select_mode(misses)
    base = misses[0]
    if mode == Mode.RAW:
        return CompressedEntry(base, mode, n, tuple(misses))
    return CompressedEntry(base, mode, n, tuple(m - base for m in misses))


def decompress(entry: CompressedEntry) -> list[int]:
    mode = _check_header(entry.mode, entry.count)
    if len(entry.payload) != entry.count:
        raise CompressionError("payload length does not match count")
    if mode == Mode.RAW:
        return list(entry.payload)
    if entry.payload and entry.payload[0] != 0:
        raise CompressionError("first delta must be zero")
    return [entry.base + d for d in entry.payload]
