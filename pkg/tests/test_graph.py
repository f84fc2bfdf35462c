import itertools
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from pottsmix import graph
from pottsmix.errors import LoopError, ParameterError, RangeError


@st.composite
def multigraphs(draw, max_n=8, max_m=14):
    n = draw(st.integers(2, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    edges = draw(st.lists(pairs, max_size=max_m))
    return graph.Graph(n, tuple(edges))


def test_graph_normalises_and_rejects_bad_edges():
    G = graph.Graph(3, ((2, 0), (1, 0), (0, 1)))
    assert G.edges == ((0, 1), (0, 1), (0, 2))
    assert G.multiplicity(0, 1) == 2 and not G.is_simple()
    assert G.max_degree == 3
    with pytest.raises(LoopError):
        graph.Graph(2, ((1, 1),))
    with pytest.raises(RangeError):
        graph.Graph(2, ((0, 2),))


def test_generators():
    assert graph.path_graph(4).edges == ((0, 1), (1, 2), (2, 3))
    assert graph.cycle_graph(5).m == 5
    assert graph.complete_graph(4).m == 6
    S = graph.star_graph(3)
    assert S.degree(0) == 3
    T = graph.toroidal_grid(3)
    assert T.n == 9 and T.m == 18 and all(T.degree(v) == 4 for v in range(9))
    B = graph.double_broom(2, 3, 2)
    assert graph.is_forest(B) and graph.is_connected(B)
    U = graph.disjoint_union(graph.path_graph(2), graph.path_graph(3))
    assert U.n == 5 and len(graph.components(U)) == 2


def test_extremal_graph_shape():
    H = graph.extremal_graph(4, 3, 3)
    assert H.edges == ((0, 1), (0, 1), (0, 1))
    H = graph.extremal_graph(6, 6, 3)
    assert H.m == 6 and H.max_degree == 3
    assert graph.is_extremal_shape(H, 3)
    assert not graph.is_extremal_shape(graph.path_graph(3), 2)


def test_subset_metrics():
    C = graph.cycle_graph(6)
    assert graph.interior_edges(C, [0, 1, 2]) == 2
    assert graph.cut_edges(C, [0, 1, 2]) == 2
    assert graph.boundary(C, [0, 1]) == (2, 5)
    assert graph.alpha_r(C, 3) == Fraction(2, 3)


@given(multigraphs())
def test_forest_decomposition_is_balanced_partition(G):
    dec = graph.forest_decomposition(G)
    used = sorted(i for f in dec.forests for i in f)
    assert used == list(range(G.m))
    d = max(G.max_degree, 1)
    for es in dec.edge_sets():
        assert graph.is_forest(graph.Graph(G.n, tuple(es)))
    if G.max_degree:
        assert set(dec.sizes()) <= {G.m // d, -(-G.m // d)}


@given(multigraphs())
def test_edge_list_round_trip(G):
    assert graph.parse_edge_list("# comment\n" + graph.format_edge_list(G)) == G


def test_edge_list_file(tmp_path):
    G = graph.cycle_graph(4)
    path = tmp_path / "g.txt"
    graph.write_edge_list(G, path, header=["cycle"])
    assert path.read_text().startswith("# cycle\n")
    assert graph.read_edge_list(path) == G
    with pytest.raises(ParameterError):
        graph.parse_edge_list("3 2\n0 1\n")


@given(multigraphs())
def test_components_match_networkx(G):
    H = nx.MultiGraph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges)
    ours = sorted(sorted(c) for c in graph.components(G))
    theirs = sorted(sorted(c) for c in nx.connected_components(H))
    assert ours == theirs
    assert graph.is_forest(G) == (G.is_simple() and nx.is_forest(nx.Graph(H)))


@given(st.integers(0, 10_000))
def test_random_regular_is_simple_and_regular(seed):
    G = graph.random_regular(10, 3, seed)
    assert G.is_simple() and all(G.degree(v) == 3 for v in range(10))
    assert graph.random_regular(10, 3, seed) == G


def test_random_regular_rejects_odd_stub_count():
    with pytest.raises(ParameterError):
        graph.random_regular(5, 3, 0)


def test_induced_subgraph_relabels():
    C = graph.cycle_graph(5)
    H = graph.induced_subgraph(C, [1, 2, 3])
    assert H.n == 3 and H.edges == ((0, 1), (1, 2))


def test_alpha_r_bruteforce():
    G = graph.complete_graph(6)
    best = max(graph.interior_edges(G, A) for A in itertools.combinations(range(6), 3))
    assert graph.alpha_r(G, 3) == Fraction(best, 3) == 1
    with pytest.raises(ParameterError):
        graph.alpha_r(G, 4)
