"""Small drivers shared by the test modules."""

import importlib.util
from pathlib import Path

from amcsim.amc import AmcConfig, AmcPrefetcher
from amcsim.amc.compression import CompressedEntry, compressed_bits, decompress
from amcsim.core import Access, AddrFBase, AddrTBase, End, Init, Region, RegionMap, Update

ROOT = Path(__file__).resolve().parent.parent


def load_script(name: str):
    path = ROOT / "scripts" / f"{name}.py"
    spec = importlib.util.spec_from_file_location(name, path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def buffer_entries(buf) -> list:
    """(trigger deltas, miss blocks) for every entry in a metadata buffer,
    decoded straight from the stored bytes."""
    out = []
    for idx in buf.index_region:
        n = (compressed_bits(idx.mode, idx.miss_count) + 7) // 8
        data = bytes(buf.miss_region[idx.miss_offset:idx.miss_offset + n])
        out.append((idx.trigger, decompress(CompressedEntry.from_bytes(data, idx.mode, idx.miss_count))))
    return out


class AmcDriver:
    """Feeds a flagged trace directly into AmcPrefetcher (no cache model).

    An access flagged as a miss is reported as an L2 miss. ``recorded`` holds
    the entries of each finished recording pass, captured at every Update.
    """

    def __init__(self, config: AmcConfig = AmcConfig()):
        self.amc = AmcPrefetcher(config, record_history=True)
        self.candidates = [[]]
        self.recorded = []
        self.stats = None
        self._t = self._f = None
        self._map = None

    def feed(self, events) -> "AmcDriver":
        amc = self.amc
        for ev in events:
            if isinstance(ev, Init):
                amc.init()
            elif isinstance(ev, AddrTBase):
                self._t = ev.region
                amc.set_target(ev.region)
            elif isinstance(ev, AddrFBase):
                self._f = ev.region
                amc.set_frontier(ev.region)
            elif isinstance(ev, Access):
                if self._map is None:
                    self._map = RegionMap(self._t, self._f)
                region = self._map.classify(ev.vaddr)
                res = amc.on_l1_access(ev.vaddr, region)
                self.candidates[-1].extend(res.candidates)
                if ev.miss:
                    amc.on_l2_miss(ev.vaddr >> 6, region is Region.TARGET)
            elif isinstance(ev, Update):
                amc.on_update()
                self.recorded.append(buffer_entries(amc.store.prefetching))
                self.candidates.append([])
            elif isinstance(ev, End):
                self.stats = amc.on_end()
        return self


def naive_lru_misses(blocks, l1_sets, l1_ways, l2_sets, l2_ways) -> list:
    """Reference two-level non-inclusive LRU: list-per-set, most recent last.

    An L1 miss looks up L2; both fill on a memory miss, only L1 fills on an
    L2 hit, and L1 victims are simply dropped. Returns the blocks that went
    to memory, in order.
    """
    l1 = [[] for _ in range(l1_sets)]
    l2 = [[] for _ in range(l2_sets)]

    def hit(sets, n, b):
        s = sets[b % n]
        if b in s:
            s.remove(b)
            s.append(b)
            return True
        return False

    def fill(sets, n, ways, b):
        s = sets[b % n]
        if len(s) == ways:
            s.pop(0)
        s.append(b)

    out = []
    for b in blocks:
        if hit(l1, l1_sets, b):
            continue
        if not hit(l2, l2_sets, b):
            out.append(b)
            fill(l2, l2_sets, l2_ways, b)
        fill(l1, l1_sets, l1_ways, b)
    return out
