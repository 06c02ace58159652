import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amcsim.core import Access, Region, Update, split_iterations, validate_trace
from amcsim.workload import fixture as fx
from amcsim.workload.graph import Graph, MutationSchedule, gen_graph, load_csr, mutate, save_csr
from amcsim.workload.kernels import (
    PC_V,
    LayoutPlan,
    PgdParams,
    emit_bellmanford_trace,
    emit_bfs_trace,
    emit_cc_trace,
    emit_iterations,
    emit_pgd_trace,
    naive_pgd_active_sets,
    pgd_active_sets,
)

# -- graphs ---------------------------------------------------------------------------


def test_uniform_graph_edge_count_over_seeds():
    for seed in range(20):
        g = gen_graph(1000, 9, "uniform", seed)
        g.validate()
        assert abs(g.edge_count - 9000) <= 450


def test_generation_is_deterministic():
    assert gen_graph(300, 5, seed=4) == gen_graph(300, 5, seed=4)
    assert not gen_graph(300, 5, seed=4) == gen_graph(300, 5, seed=5)


def test_power_law_graph_is_skewed():
    g = gen_graph(2000, 8, "power_law", 1)
    g.validate()
    deg = g.out_degree()
    assert deg.max() > 10 * deg.mean()


def test_no_self_loops_or_duplicates():
    g = gen_graph(200, 20, seed=2)
    for v in range(g.vertex_count):
        nb = g.neighbors_of(v).tolist()
        assert v not in nb and nb == sorted(set(nb))


@pytest.mark.parametrize("args", [(1, 1), (10, 0.5), (10, 10), (10, 2, "smallworld")])
def test_generator_rejects(args):
    with pytest.raises(ValueError):
        gen_graph(*args)


def test_csr_round_trip(tmp_path):
    g = gen_graph(100, 4, seed=3)
    save_csr(g, tmp_path / "g.csr")
    assert load_csr(tmp_path / "g.csr") == g
    (tmp_path / "bad.csr").write_bytes(b"CSR1" + bytes(10))
    with pytest.raises(ValueError):
        load_csr(tmp_path / "bad.csr")


def test_mutate_identity():
    g = gen_graph(100, 4, seed=3)
    assert mutate(g, MutationSchedule(0, 0, 1)) == g


@given(st.integers(10, 120), st.floats(0, 0.5), st.floats(0, 0.5), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_mutate_properties(n, add, delete, seed):
    g = gen_graph(n, 3, seed=seed)
    m = mutate(g, MutationSchedule(add, delete, seed))
    m.validate()
    n_del = int(round(delete * n))
    assert m.vertex_count == n + int(round(add * n))
    old, new = g.to_adjacency(), m.to_adjacency()
    for v in range(n):
        # old vertices only lose old edges, and gain edges to new vertices
        assert {u for u in new[v] if u < n} <= set(old[v])
    for w in range(n, m.vertex_count):
        for u in new[w]:
            assert u < n and w in new[u]
    incoming = {u for nb in new for u in nb}
    vanished = [v for v in range(n) if not new[v] and v not in incoming]
    assert len(vanished) >= n_del


def test_mutate_rejects_large_fractions():
    with pytest.raises(ValueError):
        MutationSchedule(0.6, 0.1)


# -- PageRank-delta -------------------------------------------------------------------


small_graphs = st.integers(2, 64).flatmap(
    lambda n: st.lists(
        st.lists(st.integers(0, n - 1), max_size=6), min_size=n, max_size=n
    ).map(lambda adj: Graph.from_adjacency([sorted(set(a) - {v}) for v, a in enumerate(adj)]))
)


@given(small_graphs, st.floats(1e-4, 1e-2))
@settings(max_examples=60, deadline=None)
def test_active_sets_match_naive_oracle(g, thr):
    p = PgdParams(delta_threshold=thr, max_iterations=8)
    fast = [m.tolist() for m in pgd_active_sets(g, p)]
    assert fast == naive_pgd_active_sets(g, p)


def test_churn_mode_keeps_size_and_swaps():
    g = gen_graph(1000, 9, seed=1)
    sets = pgd_active_sets(g, PgdParams(max_iterations=6, churn=0.15, active_fraction=0.2))
    assert sets[0].all()
    sizes = [int(s.sum()) for s in sets[1:]]
    assert sizes == [200] * 5
    for a, b in zip(sets[1:], sets[2:]):
        assert int((a & ~b).sum()) == 30


def test_zero_churn_freezes_the_active_set():
    g = gen_graph(500, 6, seed=2)
    sets = pgd_active_sets(g, PgdParams(max_iterations=5, churn=0.0, active_fraction=0.2))
    assert all((s == sets[1]).all() for s in sets[2:])


def test_pgd_trace_addresses_stay_in_layout():
    g = gen_graph(200, 5, seed=0)
    layout = LayoutPlan.packed(g.vertex_count, g.edge_count)
    ev = emit_pgd_trace(g, PgdParams(max_iterations=3, churn=0.1, active_fraction=0.3), layout)
    validate_trace(ev)
    regions = list(layout.regions.values())
    for a in (e for e in ev if isinstance(e, Access)):
        assert any(r.contains(a.vaddr) for r in regions)
    its = split_iterations(ev)
    assert len(its) == 3
    assert sum(isinstance(e, Update) for e in ev) == 3
    for it in its:
        # the frontier scan visits every vertex, in order
        f = [layout.f.delta(a.vaddr) for a in it if layout.region_map.classify(a.vaddr) is Region.FRONTIER]
        assert f == list(range(g.vertex_count))


def test_single_vertex_graph():
    g = Graph.from_adjacency([[]])
    layout = LayoutPlan.packed(1, 0)
    ev = emit_iterations(g, layout, [np.ones(1, dtype=bool)])
    validate_trace(ev)
    assert [type(e).__name__ for e in ev[3:]] == ["Access", "Access", "Update", "End"]


def test_layout_rejects_overlap():
    a = LayoutPlan.packed(10, 10)
    with pytest.raises(ValueError):
        LayoutPlan(a.v, a.v, a.p, a.f)


# -- frontier kernels ------------------------------------------------------------------


@pytest.mark.parametrize("kernel", ["bfs", "cc", "bellmanford"])
def test_frontier_kernels_emit_valid_traces(kernel):
    g = gen_graph(150, 4, seed=5)
    g2 = mutate(g, MutationSchedule(0.1, 0.1, 6))
    layout = LayoutPlan.packed(g2.vertex_count, max(g.edge_count, g2.edge_count))
    if kernel == "cc":
        ev = emit_cc_trace(g, layout)
    elif kernel == "bfs":
        ev = emit_bfs_trace([g, g2], layout)
    else:
        ev = emit_bellmanford_trace([g, g2], layout)
    validate_trace(ev)
    assert sum(isinstance(e, Update) for e in ev) >= 2


def test_bfs_visits_each_reachable_vertex_once():
    g = gen_graph(150, 3, seed=8)
    layout = LayoutPlan.packed(g.vertex_count, g.edge_count)
    ev = emit_bfs_trace([g], layout)
    seen = [layout.v.delta(e.vaddr) // 8 for e in ev if isinstance(e, Access) and e.pc == PC_V]
    reach, todo = {0}, [0]
    adj = g.to_adjacency()
    while todo:
        v = todo.pop()
        for u in adj[v]:
            if u not in reach:
                reach.add(u)
                todo.append(u)
    assert sorted(seen) == sorted(reach)


# -- the eight-vertex fixture ----------------------------------------------------------


def test_fixture_listings():
    t1 = fx.iteration1_tokens()
    assert t1[:6] == ["F0", "F1", "V1", "N2*", "P2*", "N3"]
    t2 = fx.iteration2_tokens()
    assert [t for t in t2 if t[0] == "V"] == ["V1*", "V4*", "V6*", "V7*"]
    assert all(t.endswith("*") for t in t2 if t[0] != "F")
    assert fx.block("V1") == (0x10000 + 64) >> 6 and fx.delta("P3") == 3 * 64


def test_fixture_graph():
    g = fx.fixture_graph()
    assert g.to_adjacency()[1] == [2, 3] and g.to_adjacency()[3] == [4, 5, 6]
    assert g.to_adjacency()[0] == []


def test_fixture_trace_shape():
    ex = fx.worked_example_fixture()
    validate_trace(ex.full_trace)
    validate_trace(ex.misb_trace)
    kinds = [type(e).__name__ for e in ex.full_trace if not isinstance(e, Access)]
    assert kinds == ["Init", "AddrTBase", "AddrFBase", "Update", "Update", "End"]
    assert len(ex.expected_entries) == 6
    assert len(ex.expected_entries[2][1]) == 6 and len(ex.table_entries[2][1]) == 4


def test_write_fixture(tmp_path):
    from amcsim.traceio import load_trace

    paths = fx.write_fixture(tmp_path)
    assert [p.name for p in paths] == ["worked_example.jsonl", "worked_example_misb.jsonl", "iteration1.jsonl"]
    assert load_trace(paths[0]) == fx.worked_example_trace()
