import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibm.graph import (CommunityPartition, Graph, GraphFormatError, ProblemInstance, load_communities,
                        load_edge_list, top_degree_seeds)


def test_uniform_in_degree_weights(write):
    g = load_edge_list(write("g.txt", "0 1\n1 2\n0 2\n"), directed=True)
    arcs = {(g.label(u), g.label(v)): w for u, v, w in g.arcs()}
    assert arcs == {("0", "1"): 1.0, ("1", "2"): 0.5, ("0", "2"): 0.5}


def test_empty_file_rejected(write):
    with pytest.raises(GraphFormatError, match="no arcs"):
        load_edge_list(write("e.txt", "# nothing\n"))


def test_karate_shape(karate_paths):
    g = load_edge_list(karate_paths[0], directed=False)
    assert g.node_count == 34
    assert len(g.src) == 156
    assert np.allclose(g.in_weight_sum(), 1.0, atol=1e-12, rtol=0)


def test_karate_top_degree_is_33(karate_paths):
    g = load_edge_list(karate_paths[0], directed=False)
    assert [g.label(v) for v in top_degree_seeds(g, 1)] == ["33"]


def test_star_center_and_full_seed_set():
    g = Graph.from_arcs(6, [(0, i, 1.0) for i in range(1, 6)] + [(i, 0, 0.2) for i in range(1, 6)])
    assert top_degree_seeds(g, 1) == [0]
    assert top_degree_seeds(g, 6) == list(range(6))


def test_duplicates_and_self_loops_warn(write, caplog):
    g = load_edge_list(write("d.txt", "0 1 0.3\n0 1 0.9\n1 1 0.5\n1 2 0.4\n"), directed=True, weight_mode="explicit")
    assert len(g.src) == 2
    assert dict(((g.label(u), g.label(v)), w) for u, v, w in g.arcs())[("0", "1")] == 0.3
    assert "duplicate" in caplog.text.lower() and "self-loop" in caplog.text.lower()


def test_bad_lines_report_line_numbers(write):
    with pytest.raises(GraphFormatError, match=":2:"):
        load_edge_list(write("b.txt", "0 1\n0\n"))
    with pytest.raises(GraphFormatError):
        load_edge_list(write("w.txt", "0 2 0.7\n1 2 0.6\n"), directed=True, weight_mode="explicit")


def test_load_is_idempotent(karate_paths):
    a = load_edge_list(karate_paths[0])
    b = load_edge_list(karate_paths[0])
    assert a.same_structure(b) and a.fingerprint() == b.fingerprint()


def test_label_round_trip(write):
    g = load_edge_list(write("l.txt", "10 200\n200 3\n"), directed=True)
    assert [g.label(v) for v in range(g.node_count)] == ["3", "10", "200"]
    assert all(g.index_of(g.label(v)) == v for v in range(g.node_count))


def test_communities(write):
    g = load_edge_list(write("g.txt", "0 1\n1 2\n2 3\n"))
    p = load_communities(write("c.txt", "0 a\n1 a\n2 b\n3 b\n"), g)
    assert p.community_count == 2
    assert [len(m) for m in p.members] == [2, 2]
    single = load_communities(write("s.txt", "0 x\n1 x\n2 x\n3 x\n"), g)
    assert single.community_count == 1
    with pytest.raises(GraphFormatError, match="3"):
        load_communities(write("m.txt", "0 a\n1 a\n2 b\n"), g)
    with pytest.raises(GraphFormatError, match="unknown"):
        load_communities(write("u.txt", "0 a\n1 a\n2 b\n3 b\n9 b\n"), g)


def test_problem_instance_validation(path_graph):
    part = CommunityPartition.from_assignment([0, 0, 0])
    with pytest.raises(ValueError):
        ProblemInstance(path_graph, part, (), 1)
    with pytest.raises(ValueError):
        ProblemInstance(path_graph, part, (0,), 1, beta=1.5)
    with pytest.raises(ValueError):
        ProblemInstance(path_graph, part, (0,), 5)
    assert ProblemInstance(path_graph, part, (0,), 1).with_beta(0.3).beta == 0.3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=40))
def test_uniform_weights_sum_to_one(edges):
    edges = [(u, v) for u, v in edges if u != v]
    if not edges:
        return
    import tempfile, os
    with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as fh:
        fh.write("".join(f"{u} {v}\n" for u, v in edges))
    try:
        g = load_edge_list(fh.name, directed=True)
    finally:
        os.unlink(fh.name)
    has_in = g.in_degree() > 0
    assert np.all(np.abs(g.in_weight_sum()[has_in] - 1.0) < 1e-12)
