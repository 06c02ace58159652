"""The hand-annotated eight-vertex walkthrough used as a golden fixture.

Every array element sits on its own cache line and the four arrays occupy
consecutive pages. Accesses marked ``*`` are L2 misses in the first pass.
The first iteration's tail after V[4] is not listed verbatim in the source
walkthrough, so it is rebuilt from the recorded-correlation rows for
(V3,V4), (V5,V6) and (V6,V7).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from ..core import Access, AddrFBase, AddrTBase, End, Init, RegionDescriptor, Update
from ..traceio import save_trace
from .graph import Graph

ELEM = 64
NV = 8
V_BASE = 0x10000
N_BASE = 0x11000
P_BASE = 0x12000
F_BASE = 0x13000
BASES = {"V": V_BASE, "N": N_BASE, "P": P_BASE, "F": F_BASE}
PCS = {"V": 0xA, "N": 0xB, "P": 0xC, "F": 0xD}

TARGET = RegionDescriptor(V_BASE, NV, ELEM)
FRONTIER = RegionDescriptor(F_BASE, NV, ELEM)

ITERATION1 = (
    "V1 N2* P2* N3 P3* V2 N1 P1* N3 P3* V3 N4* P4* N5* P5* N6* P6* "
    "V4 N3 P3* V5 N3 P3 V6 N3* P3 V7 N5* P5"
)
# every non-frontier access of the second pass misses in the baseline
ITERATION2 = "V1* N2* P2* N3* P3* V4* N3* P3* V6* N3* P3* V7* N5* P5*"

# the recorded-correlation table, as printed
TABLE_ENTRIES = (
    (("V1",), ("N2", "P2", "P3")),
    (("V1", "V2"), ("P1", "P3")),
    (("V2", "V3"), ("N4", "P4", "P5", "N6")),
    (("V3", "V4"), ("P3",)),
    (("V5", "V6"), ("N3",)),
    (("V6", "V7"), ("N5",)),
)
# what the listed access sequence actually yields for the (V2,V3) window
SEQUENCE_ENTRIES = (
    (("V1",), ("N2", "P2", "P3")),
    (("V1", "V2"), ("P1", "P3")),
    (("V2", "V3"), ("N4", "P4", "N5", "P5", "N6", "P6")),
    (("V3", "V4"), ("P3",)),
    (("V5", "V6"), ("N3",)),
    (("V6", "V7"), ("N5",)),
)

# PC-localized training pass: one (V, N, P) triple per row of the
# PC-stream table
MISB_TRIPLES = ((1, 1, 1), (2, 2, 2), (3, 4, 4), (3, 5, 5), (4, 6, 6), (5, 3, 3), (6, 7, 7), (7, 5, 5))


def addr(token: str) -> int:
    name = token.rstrip("*")
    return BASES[name[0]] + int(name[1:]) * ELEM


def block(token: str) -> int:
    return addr(token) >> 6


def delta(token: str) -> int:
    return int(token.rstrip("*")[1:]) * ELEM


def _accesses(tokens: list, with_pc: bool = True) -> list:
    out = []
    for t in tokens:
        out.append(Access(addr(t), "load", PCS[t[0]] if with_pc else None, t.endswith("*")))
    return out


def _with_frontier(listing: str) -> list:
    """Interleave the frontier scan: F[v] is read before vertex v is checked."""
    groups: dict = {}
    current = None
    for t in listing.split():
        if t[0] == "V":
            current = int(t.rstrip("*")[1:])
            groups[current] = [t]
        else:
            groups[current].append(t)
    tokens = []
    for v in range(NV):
        tokens.append(f"F{v}")
        tokens += groups.get(v, [])
    return tokens


def iteration1_tokens() -> list:
    return _with_frontier(ITERATION1)


def iteration2_tokens() -> list:
    return _with_frontier(ITERATION2)


def misb_training_tokens() -> list:
    toks = []
    for v, n, p in MISB_TRIPLES:
        toks += [f"V{v}*", f"N{n}*", f"P{p}*"]
    return toks


def header() -> list:
    return [Init(), AddrTBase(TARGET), AddrFBase(FRONTIER)]


def worked_example_trace() -> list:
    return header() + _accesses(iteration1_tokens()) + [Update()] + _accesses(iteration2_tokens()) + [Update(), End()]


def misb_trace() -> list:
    """Training pass built from the PC-stream table, then the second pass."""
    return header() + _accesses(misb_training_tokens()) + [Update()] + _accesses(iteration2_tokens()) + [Update(), End()]


def entries_as_blocks(rows) -> list:
    return [(tuple(delta(t) for t in trig), [block(m) for m in misses]) for trig, misses in rows]


@dataclass
class WorkedExample:
    graph: Graph
    iteration1_trace: list
    iteration2_trace: list
    expected_entries: list  # sequence-derived (trigger deltas, miss blocks)
    table_entries: list
    full_trace: list = field(default_factory=list)
    misb_trace: list = field(default_factory=list)


def fixture_graph() -> Graph:
    """Neighbor lists read off the first-pass listing (vertex 0 is unused)."""
    adj = [[] for _ in range(NV)]
    current = None
    for t in ITERATION1.split():
        if t[0] == "V":
            current = int(t.rstrip("*")[1:])
        elif t[0] == "N":
            adj[current].append(int(t.rstrip("*")[1:]))
    return Graph.from_adjacency(adj)


def worked_example_fixture() -> WorkedExample:
    return WorkedExample(
        graph=fixture_graph(),
        iteration1_trace=_accesses(iteration1_tokens()),
        iteration2_trace=_accesses(iteration2_tokens()),
        expected_entries=entries_as_blocks(SEQUENCE_ENTRIES),
        table_entries=entries_as_blocks(TABLE_ENTRIES),
        full_trace=worked_example_trace(),
        misb_trace=misb_trace(),
    )


def write_fixture(out_dir: Union[str, Path]) -> list:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, events in (
        ("worked_example.jsonl", worked_example_trace()),
        ("worked_example_misb.jsonl", misb_trace()),
        ("iteration1.jsonl", header() + _accesses(iteration1_tokens()) + [Update(), End()]),
    ):
        p = d / name
        save_trace(events, p)
        paths.append(p)
    return paths
