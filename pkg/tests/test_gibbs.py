import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pottsmix import gibbs, graph
from pottsmix.errors import CapacityError, ParameterError, RangeError
from pottsmix.gibbs import ModelParams

lams = st.sampled_from([Fraction(3, 2), Fraction(2), Fraction(3), Fraction(5, 4)])


@st.composite
def small_graphs(draw, max_n=5, max_m=7):
    n = draw(st.integers(1, max_n))
    if n == 1:
        return graph.Graph(1, ())
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    return graph.Graph(n, tuple(draw(st.lists(pairs, max_size=max_m))))


def z_oracle(G, lam, q):
    """Z by summing the weight of every configuration one at a time."""
    return sum(lam ** sum(1 for u, v in G.edges if X[u] == X[v])
               for X in itertools.product(range(q), repeat=G.n))


def test_activity_coercion():
    assert gibbs.as_activity(2) == Fraction(2)
    assert gibbs.as_activity("3/2") == Fraction(3, 2)
    assert isinstance(gibbs.as_activity(1.5), float)
    assert isinstance(gibbs.as_activity("1.5"), Fraction)
    assert ModelParams(2, 3).mode == "exact"
    assert ModelParams(2.0, 3).mode == "float"
    with pytest.raises(ParameterError):
        ModelParams(Fraction(1, 2), 3)
    with pytest.raises(ParameterError):
        ModelParams(2, 1)
    with pytest.raises(ParameterError):
        gibbs.require_ferromagnetic(ModelParams(1, 3))


def test_spot_values():
    assert gibbs.partition_function(graph.complete_graph(2), ModelParams(2, 2)) == 6
    assert gibbs.partition_function(graph.complete_graph(3), ModelParams(2, 3)) == 3 * 8 + 18 * 2 + 6
    assert gibbs.partition_function(graph.complete_graph(3), ModelParams(2, 2)) == 2 * 8 + 6 * 2
    assert gibbs.partition_function(graph.extremal_graph(4, 3, 3), ModelParams(2, 2)) == 72


@given(small_graphs(), lams, st.integers(2, 3))
def test_partition_function_matches_oracle(G, lam, q):
    p = ModelParams(lam, q)
    assert gibbs.partition_function(G, p) == z_oracle(G, lam, q)
    assert math.isclose(gibbs.log_partition_function(G, ModelParams(float(lam), q)),
                        math.log(z_oracle(G, lam, q)), rel_tol=1e-12)


@given(small_graphs(), lams, st.integers(2, 3))
def test_gibbs_vector_sums_to_one(G, lam, q):
    p = ModelParams(lam, q)
    pi = gibbs.gibbs_vector(G, p)
    assert sum(pi) == 1
    X = (0,) * G.n
    assert pi[gibbs.encode(X, q)] == gibbs.gibbs_prob(G, p, X)


@given(st.integers(1, 6), st.integers(2, 4), st.data())
def test_encode_decode_round_trip(n, q, data):
    X = tuple(data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n)))
    idx = gibbs.encode(X, q)
    assert gibbs.decode(idx, n, q) == X
    assert list(gibbs.all_configurations(n, q))[idx] == X
    assert tuple(gibbs.digit_matrix(n, q)[idx]) == X


def test_configuration_checks():
    G = graph.path_graph(3)
    with pytest.raises(RangeError):
        gibbs.check_configuration(G, 2, (0, 1, 2))
    with pytest.raises(ParameterError):
        gibbs.check_configuration(G, 2, (0, 1))
    assert gibbs.parse_configuration(gibbs.format_configuration((2, 0, 1))) == (2, 0, 1)


def test_capacity_error():
    with pytest.raises(CapacityError):
        gibbs.partition_function(graph.path_graph(10), ModelParams(2, 4), limit=1000)


def test_local_distribution():
    G = graph.path_graph(3)
    phi = gibbs.local_distribution(G, ModelParams(2, 3), (0, 1, 0), 1)
    assert phi.weights == (Fraction(4, 6), Fraction(1, 6), Fraction(1, 6))
    assert phi.normalizer == 6


@given(small_graphs(max_n=4), lams, st.integers(2, 3), st.data())
def test_block_distribution_is_conditional_gibbs(G, lam, q, data):
    """phi_{X,S} equals pi conditioned on agreeing with X off S."""
    p = ModelParams(lam, q)
    X = tuple(data.draw(st.lists(st.integers(0, q - 1), min_size=G.n, max_size=G.n)))
    S = sorted(data.draw(st.sets(st.integers(0, G.n - 1), min_size=1)))
    phi = gibbs.block_distribution(G, p, X, S)
    weights = [gibbs.gibbs_prob(G, p, gibbs.overwrite(X, S, c)) for c in phi.support]
    total = sum(weights)
    assert list(phi.weights) == [w / total for w in weights]


def _dists(q):
    w = st.lists(st.integers(0, 5), min_size=q, max_size=q).filter(lambda x: sum(x) > 0)
    return w.map(lambda x: gibbs.Distribution.from_weights(range(q), [Fraction(v) for v in x]))


@given(st.integers(2, 4).flatmap(lambda q: st.tuples(_dists(q), _dists(q))))
def test_maximal_coupling_law(pair):
    phi, phi2 = pair
    law = gibbs.coupling_law(phi, phi2)
    assert sum(law.values()) == 1
    for x in phi.support:
        assert sum(v for (a, _), v in law.items() if a == x) == phi.prob(x)
        assert sum(v for (_, b), v in law.items() if b == x) == phi2.prob(x)
    agree = sum(v for (a, b), v in law.items() if a == b)
    assert agree == 1 - gibbs.tv_distance(phi, phi2)


def test_distribution_json_and_validation():
    d = gibbs.uniform_distribution(["a", "b", "c"])
    assert d.to_json() == '[[0, "1/3"], [1, "1/3"], [2, "1/3"]]'
    with pytest.raises(ParameterError):
        gibbs.Distribution((0, 1), (Fraction(1, 2), Fraction(1, 3)))


def test_extremal_bound_examples():
    p = ModelParams(2, 2)
    assert gibbs.extremal_bound(4, 3, 3, p) == 72
    best, G = gibbs.brute_force_max_Z(3, 2, 2, p)
    assert best == 20 == gibbs.extremal_bound(3, 2, 2, p)


@pytest.mark.parametrize("n,m,d", [(3, 2, 1), (4, 3, 2), (4, 4, 2)])
def test_extremal_bound_dominates(n, m, d):
    for lam, q in [(Fraction(2), 2), (Fraction(3, 2), 3)]:
        p = ModelParams(lam, q)
        try:
            best, _ = gibbs.brute_force_max_Z(n, m, d, p)
        except ParameterError:
            continue
        assert best <= gibbs.extremal_bound(n, m, d, p)


@st.composite
def forests(draw):
    n = draw(st.integers(1, 7))
    edges = [(v, draw(st.integers(0, v - 1))) for v in range(1, n) if draw(st.booleans())]
    return graph.Graph(n, tuple(edges))


@given(forests(), st.integers(2, 4))
def test_forest_mono_pmf_is_binomial(F, q):
    expected = gibbs.binomial_pmf(F.m, Fraction(1, q))
    assert gibbs.forest_mono_pmf(F, q) == expected
    assert gibbs.forest_mono_pmf(F, q, method="enumerate") == expected


def test_forest_mono_pmf_rejects_cycles():
    with pytest.raises(ParameterError):
        gibbs.forest_mono_pmf(graph.cycle_graph(3), 2)


@given(st.lists(st.integers(0, 2), min_size=2, max_size=3), st.integers(2, 3))
def test_domination_gap_at_most_one(values, d):
    gap = gibbs.domination_gap(values, Fraction(2), d)
    assert Fraction(1) >= gap > 0
