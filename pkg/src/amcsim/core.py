"""Addresses, data-structure regions, trace events and address translation."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Union

BLOCK_OFFSET_BITS = 6
BLOCK_SIZE = 1 << BLOCK_OFFSET_BITS
PHYS_ADDR_BITS = 52
BLOCK_ADDR_BITS = PHYS_ADDR_BITS - BLOCK_OFFSET_BITS  # 46
MAX_BLOCK = (1 << BLOCK_ADDR_BITS) - 1
VADDR_MASK = (1 << 64) - 1
PAGE_BITS = 12

# Fixture arrays use one cache line per element, so 32/64 are allowed on top of
# the packed sizes used by synthetic layouts.
ELEMENT_SIZES = (1, 2, 4, 8, 16, 32, 64)


class TraceError(ValueError):
    """Malformed trace, either structurally or at the byte level."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class Region(enum.Enum):
    TARGET = "target"
    FRONTIER = "frontier"
    OTHER = "other"


@dataclass(frozen=True)
class RegionDescriptor:
    base: int
    element_count: int
    element_size: int

    def __post_init__(self):
        if self.element_size not in ELEMENT_SIZES:
            raise ValueError(f"element_size must be one of {ELEMENT_SIZES}, got {self.element_size}")
        if self.element_count <= 0:
            raise ValueError("element_count must be positive")
        if not 0 <= self.base <= VADDR_MASK or self.end - 1 > VADDR_MASK:
            raise ValueError("region does not fit in the 64-bit address space")

    @property
    def length(self) -> int:
        return self.element_count * self.element_size

    @property
    def end(self) -> int:
        return self.base + self.length

    def contains(self, vaddr: int) -> bool:
        return self.base <= vaddr < self.end

    def delta(self, vaddr: int) -> int:
        """Element-aligned byte offset of ``vaddr`` from the region base."""
        off = vaddr - self.base
        return off - off % self.element_size

    def address(self, index: int) -> int:
        return self.base + index * self.element_size


@dataclass(frozen=True)
class RegionMap:
    target: RegionDescriptor
    frontier: RegionDescriptor

    def __post_init__(self):
        t, f = self.target, self.frontier
        if t.base < f.end and f.base < t.end:
            raise ValueError("target and frontier regions overlap")

    def classify(self, vaddr: int) -> Region:
        if self.target.base <= vaddr < self.target.end:
            return Region.TARGET
        if self.frontier.base <= vaddr < self.frontier.end:
            return Region.FRONTIER
        return Region.OTHER


def classify(region_map: RegionMap, vaddr: int) -> Region:
    return region_map.classify(vaddr)


# --- trace events -----------------------------------------------------------


@dataclass(frozen=True)
class Access:
    """A demand load or store.

    ``pc`` is only consumed by PC-localized baselines. ``miss`` is a hint used by
    the flagged-miss memory model (hand-annotated fixtures); the LRU hierarchy
    ignores it.
    """

    vaddr: int
    kind: str = "load"
    pc: Optional[int] = None
    miss: bool = False

    def __post_init__(self):
        if self.kind not in ("load", "store"):
            raise ValueError(f"access kind must be load or store, got {self.kind!r}")
        if not 0 <= self.vaddr <= VADDR_MASK:
            raise ValueError("vaddr outside the 64-bit address space")


@dataclass(frozen=True)
class Init:
    pass


@dataclass(frozen=True)
class AddrTBase:
    region: RegionDescriptor


@dataclass(frozen=True)
class AddrFBase:
    region: RegionDescriptor


@dataclass(frozen=True)
class Update:
    pass


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class Reset:
    """Context-switch metadata reset; never emitted by the bundled workloads."""


Directive = Union[Init, AddrTBase, AddrFBase, Update, End, Reset]
TraceEvent = Union[Access, Directive]


def validate_trace(events: Iterable[TraceEvent]) -> None:
    """Raise TraceError unless ``events`` is a well-formed trace."""
    seen_init = seen_end = False
    seen_t = seen_f = False
    for i, ev in enumerate(events):
        if seen_end:
            raise TraceError(f"event {i} follows End")
        if isinstance(ev, Init):
            if seen_init:
                raise TraceError(f"second Init at event {i}")
            seen_init = True
        elif isinstance(ev, Access):
            if not seen_init:
                raise TraceError(f"access at event {i} precedes Init")
        elif isinstance(ev, AddrTBase):
            seen_t = True
        elif isinstance(ev, AddrFBase):
            seen_f = True
        elif isinstance(ev, Update):
            if not (seen_t and seen_f):
                raise TraceError(f"Update at event {i} before AddrTBase/AddrFBase")
        elif isinstance(ev, End):
            seen_end = True
        if not isinstance(ev, Init) and not seen_init:
            raise TraceError(f"event {i} precedes Init")
    if not seen_init:
        raise TraceError("trace has no Init")
    if not seen_end:
        raise TraceError("trace does not end with End")


def split_iterations(events: Iterable[TraceEvent]) -> list[list[Access]]:
    """Group accesses into iterations delimited by Update directives."""
    iterations: list[list[Access]] = [[]]
    for ev in events:
        if isinstance(ev, Access):
            iterations[-1].append(ev)
        elif isinstance(ev, Update):
            iterations.append([])
    if not iterations[-1]:
        iterations.pop()
    return iterations


# --- address translation ----------------------------------------------------


class Translator:
    """Virtual byte address -> 46-bit physical block address.

    ``identity`` drops the bits above the physical span. ``page_shuffled``
    permutes 4KB page frames with a seeded Feistel bijection over the page
    number space, keeping the in-page offset.
    """

    ROUNDS = 4

    def __init__(self, mode: str = "identity", seed: int = 0, phys_bits: int = PHYS_ADDR_BITS):
        if mode not in ("identity", "page_shuffled"):
            raise ValueError(f"unknown translation mode {mode!r}")
        if not PAGE_BITS < phys_bits <= PHYS_ADDR_BITS:
            raise ValueError("phys_bits out of range")
        self.mode = mode
        self.seed = seed
        self.phys_bits = phys_bits
        self._page_bits = phys_bits - PAGE_BITS
        self._half = (self._page_bits + 1) // 2
        self._keys = [
            int.from_bytes(hashlib.blake2b(f"{seed}:{r}".encode(), digest_size=8).digest(), "little")
            for r in range(self.ROUNDS)
        ]
        self._pages: dict[int, int] = {}

    def _round(self, r: int, x: int) -> int:
        h = (x * 0x9E3779B97F4A7C15 + self._keys[r]) & ((1 << 64) - 1)
        h ^= h >> 29
        h = (h * 0xBF58476D1CE4E5B9) & ((1 << 64) - 1)
        h ^= h >> 32
        return h & ((1 << self._half) - 1)

    def _feistel(self, x: int) -> int:
        mask = (1 << self._half) - 1
        left, right = x >> self._half, x & mask
        for r in range(self.ROUNDS):
            left, right = right, left ^ self._round(r, right)
        return (left << self._half) | right

    def permute_page(self, page: int) -> int:
        # cycle-walk so the permutation stays inside [0, 2^page_bits)
        out = self._pages.get(page)
        if out is None:
            out = self._feistel(page)
            while out >> self._page_bits:
                out = self._feistel(out)
            self._pages[page] = out
        return out

    def translate(self, vaddr: int) -> int:
        paddr = vaddr & ((1 << self.phys_bits) - 1)
        if self.mode == "identity":
            return paddr >> BLOCK_OFFSET_BITS
        page = paddr >> PAGE_BITS
        frame = self.permute_page(page)
        return ((frame << PAGE_BITS) | (paddr & ((1 << PAGE_BITS) - 1))) >> BLOCK_OFFSET_BITS

    __call__ = translate


def translate(vaddr: int, translator: Optional[Translator] = None) -> int:
    return (translator or _IDENTITY).translate(vaddr)


_IDENTITY = Translator()
