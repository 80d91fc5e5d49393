import pytest

from parapc.graph import (
    DAG,
    CpdagGraph,
    Graph,
    SepsetStore,
    adjacent_pairs,
    complete_graph,
    cpdag_dot,
    sepsets_tsv,
    skeleton_tsv,
    snapshot,
)


@pytest.mark.parametrize("p, edges", [(1, 0), (4, 6), (100, 4950)])
def test_complete_graph_edge_count(p, edges):
    g = complete_graph(p)
    assert g.n_edges() == edges
    assert all(g.degree(x) == p - 1 for x in range(p))


def test_snapshot_is_frozen():
    g = complete_graph(3)
    snap = snapshot(g)
    g.remove_edge(0, 1)
    assert 1 in snap.adj(0)
    assert 1 not in g.neighbors(0)


def test_snapshot_empty_and_path():
    assert all(not s for s in snapshot(Graph(4)).neighbours)
    snap = snapshot(Graph.from_edges(3, [(0, 1), (1, 2)]))
    assert snap.adj(1) == (0, 2)
    assert snap.adj(0) == (1,)


def test_adjacent_pairs_canonical():
    assert adjacent_pairs(complete_graph(3)) == [(0, 1), (0, 2), (1, 2)]
    assert adjacent_pairs(Graph(3)) == []
    assert adjacent_pairs(Graph.from_edges(3, [(2, 1), (0, 2)])) == [(0, 2), (1, 2)]


def test_graph_rejects_bad_input():
    with pytest.raises(ValueError):
        Graph(2).add_edge(1, 1)
    with pytest.raises(ValueError):
        Graph(2, [[False, True], [False, False]])


def test_sepset_store():
    s = SepsetStore()
    s.add(3, 1, [2, 0])
    assert s.get(1, 3) == (0, 2)
    assert (3, 1) in s
    assert len(s) == 1
    with pytest.raises(ValueError):
        s.add(0, 1, [1])


def test_dag_rejects_cycles():
    with pytest.raises(ValueError, match="cyclic"):
        DAG(3, frozenset({(0, 1), (1, 2), (2, 0)}))
    with pytest.raises(ValueError):
        DAG(2, frozenset({(0, 1), (1, 0)}))


def test_dag_vstructures():
    dag = DAG(4, frozenset({(0, 2), (1, 2), (2, 3), (0, 1)}))
    assert dag.v_structures() == set()
    dag = DAG(3, frozenset({(0, 2), (1, 2)}))
    assert dag.v_structures() == {(0, 2, 1)}


def test_cpdag_invariants():
    with pytest.raises(ValueError, match="2-cycle"):
        CpdagGraph(2, {(0, 1), (1, 0)})
    with pytest.raises(ValueError, match="both directed and undirected"):
        CpdagGraph(2, {(0, 1)}, {(1, 0)})
    g = CpdagGraph(3, {(0, 1)}, {(2, 1)})
    assert g.undirected == {(1, 2)}
    assert g.parents(1) == [0]
    assert g.undirected_neighbors(1) == [2]
    g.orient(1, 2)
    assert g.is_directed(1, 2) and g.reaches(0, 2)


def test_exports():
    names = ["b", "a", "c"]
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert skeleton_tsv(g, names) == "a\tb\na\tc\n"
    seps = SepsetStore()
    seps.add(0, 2, [1])
    seps.add(1, 2, [])
    assert sepsets_tsv(seps, names) == "a\tc\t\nb\tc\ta\n"
    dot = cpdag_dot(CpdagGraph(3, {(0, 1)}, {(1, 2)}), ["x", "z", "my var"])
    assert "x -> z;" in dot
    assert 'z -> "my var" [dir=none];' in dot
    assert dot.startswith("digraph")
