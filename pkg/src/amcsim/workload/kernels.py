"""Trace emitters for frontier-driven graph kernels.

Every kernel walks the vertex range once per iteration: a frontier load F[v],
and for active vertices a target load V[v] followed by the neighbor list N and
the neighbor properties P. P updates are read-modify-write (load then store).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..core import (
    Access,
    AddrFBase,
    AddrTBase,
    End,
    Init,
    RegionDescriptor,
    RegionMap,
    Update,
)
from .graph import Graph

PAGE = 4096

# one PC per array, mirroring a kernel loop with one load site per structure
PC_V = 0x401000
PC_N = 0x401010
PC_P = 0x401020
PC_F = 0x401030


def _page_align(x: int) -> int:
    return -(-x // PAGE) * PAGE


@dataclass(frozen=True)
class LayoutPlan:
    v: RegionDescriptor
    n: RegionDescriptor
    p: RegionDescriptor
    f: RegionDescriptor

    def __post_init__(self):
        regs = [self.v, self.n, self.p, self.f]
        for i, a in enumerate(regs):
            for b in regs[i + 1:]:
                if a.base < b.end and b.base < a.end:
                    raise ValueError("layout regions overlap")
        t, f = self.target, self.frontier
        if t.element_size % f.element_size and f.element_size % t.element_size:
            raise ValueError("frontier and target element sizes must divide one another")

    @classmethod
    def packed(cls, vertex_count: int, edge_count: int, base: int = 0x10000000,
               v_size: int = 8, n_size: int = 4, p_size: int = 8, f_size: int = 1) -> "LayoutPlan":
        """Four consecutive page-aligned arrays V, N, P, F."""
        regions = []
        addr = base
        for count, size in ((vertex_count, v_size), (max(edge_count, 1), n_size),
                            (vertex_count, p_size), (vertex_count, f_size)):
            regions.append(RegionDescriptor(addr, count, size))
            addr = _page_align(addr + count * size)
        return cls(*regions)

    @property
    def target(self) -> RegionDescriptor:
        return self.v

    @property
    def frontier(self) -> RegionDescriptor:
        return self.f

    @property
    def region_map(self) -> RegionMap:
        return RegionMap(self.target, self.frontier)

    @property
    def regions(self) -> dict:
        return {"V": self.v, "N": self.n, "P": self.p, "F": self.f}

    @property
    def input_bytes(self) -> int:
        return sum(r.length for r in self.regions.values())


@dataclass(frozen=True)
class PgdParams:
    alpha: float = 0.85
    delta_threshold: float = 1e-4
    epsilon: float = 1e-7
    max_iterations: int = 10
    # Churn mode: after an all-active first iteration the active set holds
    # round(active_fraction * n) vertices and round(churn * size) of them are
    # swapped each iteration. None selects the pure threshold rule.
    churn: Optional[float] = None
    active_fraction: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.delta_threshold <= 0 or self.epsilon <= 0:
            raise ValueError("delta_threshold and epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.churn is not None and not 0 <= self.churn <= 1:
            raise ValueError("churn must lie in [0, 1]")
        if not 0 < self.active_fraction <= 1:
            raise ValueError("active_fraction must lie in (0, 1]")


# --- reference PageRank-delta --------------------------------------------------


def _push(graph: Graph, active: np.ndarray, delta: np.ndarray) -> np.ndarray:
    n = graph.vertex_count
    deg = graph.out_degree()
    src = np.repeat(np.arange(n), deg)
    send = active & (deg > 0)
    share = np.zeros(n)
    share[send] = delta[send] / deg[send]
    return np.bincount(graph.neighbors, weights=share[src], minlength=n)


def _swap(active: np.ndarray, mag: np.ndarray, k: int) -> np.ndarray:
    ids = np.arange(len(active))
    act = ids[active]
    ina = ids[~active]
    k = min(k, len(act), len(ina))
    if k == 0:
        return active.copy()
    drop = act[np.lexsort((act, mag[act]))[:k]]
    add = ina[np.lexsort((ina, -mag[ina]))[:k]]
    out = active.copy()
    out[drop] = False
    out[add] = True
    return out


def pgd_active_sets(graph: Graph, params: PgdParams) -> list:
    """Active-vertex masks per iteration of push-style PageRank-delta.

    Inactive vertices keep accumulating their residual delta, so they can
    re-enter the active set later.
    """
    n = graph.vertex_count
    delta = np.full(n, 1.0 / n)
    active = np.ones(n, dtype=bool)
    size = int(round(params.active_fraction * n))
    sets = []
    for it in range(params.max_iterations):
        sets.append(active.copy())
        ngh = _push(graph, active, delta)
        delta = params.alpha * ngh + np.where(active, 0.0, delta)
        mag = np.abs(delta)
        if params.churn is None:
            if mag.sum() < params.epsilon:
                break
            active = mag > params.delta_threshold
            if not active.any():
                break
        elif it == 0:
            order = np.lexsort((np.arange(n), -mag))
            active = np.zeros(n, dtype=bool)
            active[order[:size]] = True
        else:
            active = _swap(active, mag, int(round(params.churn * active.sum())))
    return sets


def naive_pgd_active_sets(graph: Graph, params: PgdParams) -> list:
    """Loop-by-loop restatement of the threshold rule, kept as a test oracle."""
    n = graph.vertex_count
    adj = graph.to_adjacency()
    delta = [1.0 / n] * n
    active = [True] * n
    sets = []
    for _ in range(params.max_iterations):
        sets.append(list(active))
        acc = [0.0] * n
        for v in range(n):
            if active[v] and adj[v]:
                s = delta[v] / len(adj[v])
                for u in adj[v]:
                    acc[u] += s
        delta = [params.alpha * acc[v] + (0.0 if active[v] else delta[v]) for v in range(n)]
        if sum(abs(d) for d in delta) < params.epsilon:
            break
        active = [abs(d) > params.delta_threshold for d in delta]
        if not any(active):
            break
    return sets


# --- emission ----------------------------------------------------------------------


def _header(layout: LayoutPlan) -> list:
    return [Init(), AddrTBase(layout.target), AddrFBase(layout.frontier)]


def _vertex_pass(graph: Graph, layout: LayoutPlan, active, visit=None) -> list:
    """One iteration. ``visit(v, u)`` decides whether P[u] is written; the
    default is an unconditional read-modify-write."""
    v_r, n_r, p_r, f_r = layout.v, layout.n, layout.p, layout.f
    off = graph.offsets.tolist()
    nb = graph.neighbors.tolist()
    out = []
    app = out.append
    for v in range(graph.vertex_count):
        app(Access(f_r.address(v), "load", PC_F))
        if not active[v]:
            continue
        app(Access(v_r.address(v), "load", PC_V))
        for e in range(off[v], off[v + 1]):
            u = nb[e]
            app(Access(n_r.address(e), "load", PC_N))
            pa = p_r.address(u)
            app(Access(pa, "load", PC_P))
            if visit is None or visit(v, u):
                app(Access(pa, "store", PC_P))
    return out


def emit_iterations(graph: Graph, layout: LayoutPlan, active_sets: Iterable) -> list:
    events = _header(layout)
    for mask in active_sets:
        events += _vertex_pass(graph, layout, mask)
        events.append(Update())
    events.append(End())
    return events


def emit_pgd_trace(graph: Graph, params: PgdParams, layout: LayoutPlan) -> list:
    return emit_iterations(graph, layout, pgd_active_sets(graph, params))


def _frontier_kernel(graphs, layout, init, relax) -> list:
    """Shared driver for BFS/CC/Bellman-Ford: ``relax(v, u)`` returns True when
    u's property improves (which writes P[u] and activates u next round)."""
    events = _header(layout)
    for graph in graphs:
        n = graph.vertex_count
        active = init(graph)
        while active.any():
            nxt = np.zeros(n, dtype=bool)

            def visit(v, u, _nxt=nxt):
                if relax(v, u):
                    _nxt[u] = True
                    return True
                return False

            events += _vertex_pass(graph, layout, active, visit)
            events.append(Update())
            active = nxt
    events.append(End())
    return events


def emit_bfs_trace(graphs, layout: LayoutPlan, source: int = 0) -> list:
    graphs = list(graphs)
    state = {}

    def init(g):
        state["dist"] = np.full(g.vertex_count, -1, dtype=np.int64)
        state["dist"][source] = 0
        a = np.zeros(g.vertex_count, dtype=bool)
        a[source] = True
        return a

    def relax(v, u):
        d = state["dist"]
        if d[u] < 0:
            d[u] = d[v] + 1
            return True
        return False

    return _frontier_kernel(graphs, layout, init, relax)


def emit_cc_trace(graph: Graph, layout: LayoutPlan) -> list:
    state = {}

    def init(g):
        state["label"] = np.arange(g.vertex_count)
        return np.ones(g.vertex_count, dtype=bool)

    def relax(v, u):
        lab = state["label"]
        if lab[v] < lab[u]:
            lab[u] = lab[v]
            return True
        return False

    return _frontier_kernel([graph], layout, init, relax)


def edge_weight(v: int, u: int) -> int:
    return 1 + ((v * 2654435761) ^ (u * 40503)) % 16


def emit_bellmanford_trace(graphs, layout: LayoutPlan, source: int = 0) -> list:
    graphs = list(graphs)
    state = {}

    def init(g):
        d = np.full(g.vertex_count, np.iinfo(np.int64).max, dtype=np.int64)
        d[source] = 0
        state["dist"] = d
        a = np.zeros(g.vertex_count, dtype=bool)
        a[source] = True
        return a

    def relax(v, u):
        d = state["dist"]
        nd = d[v] + edge_weight(v, u)
        if nd < d[u]:
            d[u] = nd
            return True
        return False

    return _frontier_kernel(graphs, layout, init, relax)
