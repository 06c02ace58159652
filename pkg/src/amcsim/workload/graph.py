"""CSR graphs: generation, mutation between runs and a small binary format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

CSR_MAGIC = b"CSR1"
ZIPF_S = 1.8


@dataclass
class Graph:
    offsets: np.ndarray  # int64, length vertex_count + 1
    neighbors: np.ndarray  # int64, length edge_count

    @property
    def vertex_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def edge_count(self) -> int:
        return int(self.offsets[-1])

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.offsets)

    def validate(self) -> None:
        o, n = self.offsets, self.neighbors
        if len(o) < 1 or o[0] != 0:
            raise ValueError("offsets must start at 0")
        if np.any(np.diff(o) < 0):
            raise ValueError("offsets must be nondecreasing")
        if o[-1] != len(n):
            raise ValueError("last offset must equal edge_count")
        if len(n) and (n.min() < 0 or n.max() >= self.vertex_count):
            raise ValueError("neighbor index out of range")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.neighbors, other.neighbors)
        )

    @classmethod
    def from_adjacency(cls, adj: list) -> "Graph":
        offsets = np.zeros(len(adj) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(a) for a in adj])
        flat = np.fromiter((u for a in adj for u in a), dtype=np.int64, count=int(offsets[-1]))
        return cls(offsets, flat)

    def to_adjacency(self) -> list:
        return [self.neighbors_of(v).tolist() for v in range(self.vertex_count)]


@dataclass(frozen=True)
class MutationSchedule:
    add_fraction: float = 0.1
    delete_fraction: float = 0.1
    seed: int = 0
    avg_degree: float = 0.0  # 0: reuse the source graph's mean out-degree

    def __post_init__(self):
        for name in ("add_fraction", "delete_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5], got {v}")


def _degrees(rng: np.random.Generator, n: int, avg_degree: float, model: str) -> np.ndarray:
    if model == "uniform":
        deg = rng.poisson(avg_degree, size=n)
    elif model == "power_law":
        raw = rng.zipf(ZIPF_S, size=n).astype(np.float64)
        raw = np.minimum(raw, n - 1)
        deg = np.rint(raw * (avg_degree / raw.mean()))
    else:
        raise ValueError(f"unknown graph model {model!r}")
    return np.clip(deg, 0, n - 1).astype(np.int64)


def _targets(rng: np.random.Generator, v: int, k: int, n: int) -> np.ndarray:
    # k distinct vertices other than v, sorted
    pick = rng.choice(n - 1, size=k, replace=False)
    pick[pick >= v] += 1
    pick.sort()
    return pick


def gen_graph(vertex_count: int, avg_degree: float, model: str = "uniform", seed: int = 0) -> Graph:
    if vertex_count < 2:
        raise ValueError("vertex_count must be >= 2")
    if avg_degree < 1:
        raise ValueError("avg_degree must be >= 1")
    if avg_degree >= vertex_count:
        raise ValueError("avg_degree must be smaller than vertex_count")
    rng = np.random.default_rng(seed)
    deg = _degrees(rng, vertex_count, avg_degree, model)
    adj = [_targets(rng, v, int(deg[v]), vertex_count) for v in range(vertex_count)]
    g = Graph.from_adjacency(adj)
    g.validate()
    return g


def mutate(graph: Graph, schedule: MutationSchedule) -> Graph:
    """Isolate a random subset of vertices and append new ones.

    Deleted vertices keep their ids (so arrays stay index-compatible) but lose
    every incident edge. Each new vertex gets out-edges to surviving vertices
    plus the reverse edges, so it is reachable from the old graph.
    """
    rng = np.random.default_rng(schedule.seed)
    n = graph.vertex_count
    n_del = int(round(schedule.delete_fraction * n))
    n_add = int(round(schedule.add_fraction * n))
    if n_del == 0 and n_add == 0:
        return Graph(graph.offsets.copy(), graph.neighbors.copy())
    deleted = set(rng.choice(n, size=n_del, replace=False).tolist()) if n_del else set()
    adj = [
        [] if v in deleted else [u for u in graph.neighbors_of(v).tolist() if u not in deleted]
        for v in range(n)
    ]
    alive = np.array([v for v in range(n) if v not in deleted], dtype=np.int64)
    avg = schedule.avg_degree or max(1.0, graph.edge_count / max(n, 1))
    for i in range(n_add):
        v = n + i
        k = min(int(rng.poisson(avg)), len(alive))
        outs = np.sort(rng.choice(alive, size=k, replace=False)) if k else np.array([], dtype=np.int64)
        adj.append(outs.tolist())
        for u in outs.tolist():
            adj[u].append(v)
    g = Graph.from_adjacency([sorted(set(a)) for a in adj])
    g.validate()
    return g


def save_csr(graph: Graph, path: Union[str, Path]) -> None:
    with open(path, "wb") as fh:
        fh.write(CSR_MAGIC)
        fh.write(struct.pack("<QQ", graph.vertex_count, graph.edge_count))
        fh.write(graph.offsets.astype("<u8").tobytes())
        fh.write(graph.neighbors.astype("<u8").tobytes())


def load_csr(path: Union[str, Path]) -> Graph:
    data = Path(path).read_bytes()
    if data[:4] != CSR_MAGIC:
        raise ValueError("not a CSR1 file")
    if len(data) < 20:
        raise ValueError("truncated CSR1 header")
    n, m = struct.unpack_from("<QQ", data, 4)
    need = 20 + 8 * (n + 1) + 8 * m
    if len(data) != need:
        raise ValueError(f"CSR1 file is {len(data)} bytes, expected {need}")
    offsets = np.frombuffer(data, dtype="<u8", count=n + 1, offset=20).astype(np.int64)
    neighbors = np.frombuffer(data, dtype="<u8", count=m, offset=20 + 8 * (n + 1)).astype(np.int64)
    g = Graph(offsets, neighbors)
    g.validate()
    return g
