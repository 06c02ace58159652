from .fixture import worked_example_fixture
from .graph import Graph, MutationSchedule, gen_graph, load_csr, mutate, save_csr
from .kernels import (
    LayoutPlan,
    PgdParams,
    emit_bellmanford_trace,
    emit_bfs_trace,
    emit_cc_trace,
    emit_pgd_trace,
    naive_pgd_active_sets,
    pgd_active_sets,
)

__all__ = [
    "Graph",
    "LayoutPlan",
    "MutationSchedule",
    "PgdParams",
    "emit_bellmanford_trace",
    "emit_bfs_trace",
    "emit_cc_trace",
    "emit_pgd_trace",
    "gen_graph",
    "load_csr",
    "mutate",
    "naive_pgd_active_sets",
    "pgd_active_sets",
    "save_csr",
    "worked_example_fixture",
]
