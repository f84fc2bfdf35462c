import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pottsmix import blocks, dynamics, gibbs, graph
from pottsmix.errors import CapacityError, ParameterError
from pottsmix.gibbs import ModelParams


def dense_glauber(G, p):
    """Oracle: P(x, y) straight from the definition, one pair at a time."""
    states = list(itertools.product(range(p.q), repeat=G.n))
    P = {}
    for X in states:
        for Y in states:
            diff = [v for v in range(G.n) if X[v] != Y[v]]
            if len(diff) > 1:
                continue
            total = Fraction(0)
            for v in (diff or range(G.n)):
                phi = gibbs.local_distribution(G, p, X, v)
                total += Fraction(1, G.n) * phi.prob(Y[v])
            if total:
                P[(X, Y)] = total
    return P


def test_glauber_operator_matches_definition():
    G = graph.path_graph(3)
    p = ModelParams(2, 2)
    P = dynamics.transition_operator(G, p)
    for (X, Y), v in dense_glauber(G, p).items():
        assert P.entry(X, Y) == v
    K2 = dynamics.transition_operator(graph.complete_graph(2), p)
    assert K2.entry((0, 0), (0, 1)) == Fraction(1, 6)


@pytest.mark.parametrize("G,q", [(graph.cycle_graph(4), 2), (graph.path_graph(3), 3),
                                 (graph.extremal_graph(4, 3, 3), 2)])
@pytest.mark.parametrize("lam", [Fraction(3, 2), Fraction(3)])
def test_reversible_for_glauber_and_blocks(G, q, lam):
    p = ModelParams(lam, q)
    pi = gibbs.gibbs_vector(G, p)
    total = G.n * (G.n + 1) // 2
    systems = [None, blocks.singleton_blocks(G, psi=[Fraction(k + 1, total) for k in range(G.n)]),
               blocks.custom_blocks(G, [range(0, G.n - 1), range(1, G.n)])]
    for system in systems:
        P = dynamics.transition_operator(G, p, system)
        assert dynamics.is_stochastic(P)
        assert dynamics.is_stationary(P, pi)
        assert dynamics.detailed_balance_violations(P, pi) == []


def test_implicit_operator_matches_transition_matrix():
    G = graph.cycle_graph(4)
    p = ModelParams(Fraction(3, 2), 2)
    system = blocks.edge_blocks(G)
    for sys_ in (None, system):
        P = dynamics.transition_operator(G, p, sys_)
        op = dynamics.implicit_operator(G, p, sys_)
        for idx in range(P.size):
            e = [Fraction(0)] * P.size
            e[idx] = Fraction(1)
            nu = np.array(e, dtype=object).reshape((2,) * 4)
            assert list(op.apply(nu).reshape(-1)) == P.left_apply(e)


def test_operators_reject_budget_and_antiferro():
    with pytest.raises(CapacityError):
        dynamics.transition_operator(graph.path_graph(5), ModelParams(2, 4), limit=100)
    with pytest.raises(ParameterError):
        dynamics.transition_operator(graph.path_graph(2), ModelParams(1, 2))


def test_run_chain_reproducible_and_thinned():
    G = graph.path_graph(4)
    p = ModelParams(2, 3)
    a = dynamics.run_chain(G, p, (0,) * 4, 20, seed=7, thin=5)
    b = dynamics.run_chain(G, p, (0,) * 4, 20, seed=7, thin=5)
    assert a == b and a.steps == (0, 5, 10, 15, 20)
    assert a.to_csv().splitlines()[0] == "step,colour_0,colour_1,colour_2,colour_3"
    c = dynamics.run_chain(G, p, (0,) * 4, 20, seed=8, thin=5)
    assert len(c.configs) == 5


def test_block_chain_respects_block():
    G = graph.cycle_graph(6)
    p = ModelParams(2, 3)
    system = blocks.custom_blocks(G, [[0, 1, 2], [3, 4, 5]])
    rng = dynamics.make_rng(1)
    X = (0,) * 6
    for _ in range(30):
        Y = dynamics.block_step(G, p, system, X, rng)
        changed = {v for v in range(6) if X[v] != Y[v]}
        assert changed <= {0, 1, 2} or changed <= {3, 4, 5}
        X = Y


def test_replica_streams_differ():
    a = dynamics.replica_rng(5, 0).random(4)
    b = dynamics.replica_rng(5, 1).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, dynamics.replica_rng(5, 0).random(4))


def test_empirical_glauber_frequencies_approach_gibbs():
    G = graph.path_graph(3)
    p = ModelParams(2, 2)
    traj = dynamics.run_chain(G, p, (0, 0, 0), 60_000, seed=3)
    counts = np.zeros(8)
    for X in traj.configs[1000:]:
        counts[gibbs.encode(X, 2)] += 1
    freq = counts / counts.sum()
    pi = np.array([float(x) for x in gibbs.gibbs_vector(G, p)])
    assert np.abs(freq - pi).max() < 0.02


def test_tv_curve_exact_and_float_agree():
    G = graph.path_graph(3)
    p = ModelParams(Fraction(3, 2), 2)
    exact = dynamics.tv_curve(G, p, (0, 0, 0), 10)
    approx = dynamics.tv_curve(G, p, (0, 0, 0), 10, exact=False)
    assert isinstance(exact.tv[3], Fraction)
    assert np.allclose([float(x) for x in exact.tv], approx.tv, atol=1e-12)
    assert exact.is_nonincreasing()
    assert exact.to_csv().startswith("t,tv\n0,")


def test_tv_curve_from_vector():
    G = graph.path_graph(2)
    p = ModelParams(2, 2)
    pi = gibbs.gibbs_vector(G, p)
    curve = dynamics.tv_curve(G, p, np.array(pi, dtype=object), 3)
    assert all(x == 0 for x in curve.tv)


def test_mixing_time_k2():
    p = ModelParams(2, 2)
    assert dynamics.mixing_time_exact(graph.complete_graph(2), p) == 3
    part = dynamics.mixing_time_exact(graph.complete_graph(2), p, starts=[(0, 1)])
    assert part <= 3


adjacent = st.tuples(st.integers(2, 4), st.data())


@given(st.sampled_from([graph.path_graph(3), graph.cycle_graph(4), graph.star_graph(3)]),
       st.sampled_from([Fraction(3, 2), Fraction(2)]), st.integers(2, 3), st.data())
def test_contraction_equals_integrated_coupling(G, lam, q, data):
    p = ModelParams(lam, q)
    A = tuple(data.draw(st.lists(st.integers(0, q - 1), min_size=G.n, max_size=G.n)))
    u = data.draw(st.integers(0, G.n - 1))
    c = data.draw(st.integers(0, q - 1).filter(lambda c: c != A[u]))
    B = A[:u] + (c,) + A[u + 1:]
    pair = dynamics.AdjacentPair.from_configs(A, B)
    assert dynamics.contraction_exact(G, p, pair) == dynamics.expected_distance_exact(G, p, A, B)


def test_coupled_step_monte_carlo_matches_contraction():
    G = graph.cycle_graph(4)
    p = ModelParams(2, 3)
    pair = dynamics.AdjacentPair((0, 1, 0, 2), (0, 2, 0, 2), 1)
    rng = dynamics.make_rng(11)
    trials = 20_000
    mean = sum(dynamics.hamming(*dynamics.coupled_glauber_step(G, p, pair, rng))
               for _ in range(trials)) / trials
    assert abs(mean - float(dynamics.contraction_exact(G, p, pair))) < 0.02


def test_adjacent_pairs_count():
    pairs = list(dynamics.adjacent_pairs(3, 3))
    assert len(pairs) == 27 * 3 * 2 // 2
    with pytest.raises(ParameterError):
        dynamics.AdjacentPair((0, 0), (1, 1), 0)


@given(st.integers(1, 4), st.integers(2, 4), st.sampled_from([Fraction(3, 2), Fraction(2), Fraction(3)]))
def test_worst_local_tv_reduction_matches_bruteforce(delta, q, lam):
    p = ModelParams(lam, q)
    g = dynamics.worst_local_tv(delta, p)
    assert g == dynamics.worst_local_tv_bruteforce(delta, p)
    if q <= 3:
        assert g == dynamics.worst_local_tv_bruteforce(delta, p, all_pairs=True)
    assert g <= dynamics.local_tv_bound(delta, p)


@given(st.integers(0, 5), st.integers(1, 4))
def test_compositions_complete(total, parts):
    got = list(dynamics._compositions(total, parts))
    want = [a for a in itertools.product(range(total + 1), repeat=parts) if sum(a) == total]
    assert sorted(got) == want and len(set(got)) == len(got)
