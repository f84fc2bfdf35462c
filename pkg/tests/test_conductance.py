import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pottsmix import conductance, dynamics, gibbs, graph
from pottsmix.errors import CapacityError, ParameterError
from pottsmix.gibbs import ModelParams


def phi_oracle(G, p):
    """Min of Phi(A) over every proper subset, by listing the subsets directly."""
    chain = conductance._chain(G, p)
    N = p.q**G.n
    return min(conductance.phi_of_set(G, p, A, chain)
               for r in range(1, N) for A in itertools.combinations(range(N), r))


@pytest.mark.parametrize("G,lam,expected", [
    (graph.complete_graph(2), Fraction(2), Fraction(4, 9)),
    (graph.complete_graph(2), Fraction(3), Fraction(3, 8)),
])
def test_global_conductance_values(G, lam, expected):
    p = ModelParams(lam, 2)
    res = conductance.global_conductance(G, p)
    assert res.phi == expected == phi_oracle(G, p)
    assert conductance.phi_of_set(G, p, res.argmin) == res.phi


def test_global_conductance_triangle():
    p = ModelParams(2, 2)
    G = graph.complete_graph(3)
    assert conductance.global_conductance(G, p).phi == Fraction(26, 105) == phi_oracle(G, p)


def test_global_conductance_budget():
    with pytest.raises(CapacityError):
        conductance.global_conductance(graph.path_graph(5), ModelParams(2, 2))


def test_conductance_sandwich_and_mixing_time():
    for G in (graph.complete_graph(2), graph.complete_graph(3)):
        for lam in (Fraction(2), Fraction(3)):
            p = ModelParams(lam, 2)
            phi = conductance.global_conductance(G, p).phi
            for r in range(0, 2):
                assert phi <= conductance.phi_ball_exact(G, p, r)
            tau = dynamics.mixing_time_exact(G, p)
            assert tau >= conductance.conductance_mixing_lower(phi)


@settings(max_examples=20)
@given(st.sampled_from([graph.path_graph(3), graph.cycle_graph(4), graph.star_graph(3),
                        graph.complete_graph(4)]),
       st.sampled_from([Fraction(3, 2), Fraction(2)]), st.integers(2, 3), st.data())
def test_shell_weight_matches_enumeration(G, lam, q, data):
    p = ModelParams(lam, q)
    r = data.draw(st.integers(0, G.n))
    assert conductance.shell_weight(G, p, r) == conductance.shell_weight_enumerated(G, p, r)
    total = sum(conductance.shell_weight(G, p, j) for j in range(G.n + 1))
    assert total == gibbs.partition_function(G, p)


def test_shell_weight_mc_agrees():
    G = graph.cycle_graph(5)
    p = ModelParams(2, 3)
    mean, se = conductance.shell_weight_mc(G, p, 2, 20_000, seed=4)
    exact = float(conductance.shell_weight(G, p, 2))
    assert abs(mean - exact) <= 4 * se


def test_shell_sums_and_ball_bound():
    G = graph.complete_graph(3)
    p = ModelParams(3, 2)
    s = conductance.shell_sums(G, p, 1)
    assert s.Z_exact and s.Z == gibbs.partition_function(G, p)
    assert s.as_dict()["W_shell"] == str(s.W_shell)
    assert conductance.phi_ball_bound(G, p, 0) == 2
    with pytest.raises(ParameterError):
        conductance.phi_ball_bound(G, p, 3)


def test_ball_bound_dominates_when_complement_heavy():
    G = graph.cycle_graph(4)
    p = ModelParams(Fraction(3, 2), 3)
    pi = gibbs.gibbs_vector(G, p)
    for r in range(G.n):
        ball = conductance.ball_states(G.n, p.q, r)
        if sum(pi[x] for x in ball) <= Fraction(1, 2):
            assert conductance.phi_ball_exact(G, p, r) <= conductance.phi_ball_bound(G, p, r)


def test_mixing_lower_edge_cases():
    assert conductance.conductance_mixing_lower(0) == float("inf")
    with pytest.raises(ParameterError):
        conductance.conductance_mixing_lower(-1)


def test_complement_edges():
    G = graph.random_regular(10, 3, 1)
    for r in (1, 2, 3):
        assert conductance.complement_edge_violations(G, r, 1.2) == 0
