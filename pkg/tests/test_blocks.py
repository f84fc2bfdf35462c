import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pottsmix import blocks, graph
from pottsmix.errors import CoverageError, ParameterError


def test_coverage_and_psi_validation():
    G = graph.path_graph(3)
    with pytest.raises(CoverageError):
        blocks.custom_blocks(G, [[0, 1]])
    with pytest.raises(ParameterError):
        blocks.custom_blocks(G, [[0, 1], [2]], psi=[Fraction(1, 2), Fraction(1, 3)])
    system = blocks.custom_blocks(G, [[0, 1], [1, 2]], psi=[Fraction(1, 3), Fraction(2, 3)])
    assert blocks.BlockSystem.from_json(system.to_json()) == system


def test_k_block_bfs_order():
    C = graph.cycle_graph(8)
    system = blocks.k_block_bfs(C, 3)
    assert system.blocks[0] == (0, 1, 7)
    assert system.blocks[4] == (3, 4, 5)
    with pytest.raises(ParameterError):
        blocks.k_block_bfs(C, 8)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_grid_parameters(r):
    G = graph.toroidal_grid(6)
    system = blocks.grid_blocks(G, r)
    assert len(system.blocks) == 36 and system.max_size == r * r
    assert blocks.psi_ratio(G, system) == Fraction(4, r)
    assert math.isclose(blocks.partial_plus(G, system), min(r * r, 4 * r) * math.log(4 * r))
    assert blocks.partial_plus_value(G, system) == (4 * r) ** min(r * r, 4 * r)


def test_grid_blocks_need_room():
    with pytest.raises(ParameterError):
        blocks.grid_blocks(graph.toroidal_grid(4), 3)
    with pytest.raises(ParameterError):
        blocks.grid_blocks(graph.cycle_graph(9), 1)


def test_mu_plus_cycle_values():
    C = graph.cycle_graph(8)
    for k, expected in [(2, Fraction(3, 2)), (3, Fraction(4, 3)), (4, Fraction(5, 4))]:
        value = blocks.mu_plus_exact(C, blocks.k_block_bfs(C, k))
        assert value == expected == blocks.mu_plus_upper("k-block", delta=2, k=k)


def test_mu_plus_grid_r2():
    G = graph.toroidal_grid(6)
    value = blocks.mu_plus_exact(G, blocks.grid_blocks(G, 2))
    assert value == 3 and 2 <= value <= blocks.mu_plus_upper("grid", r=2)


def _random_block(seed):
    rnd = random.Random(seed)
    n = rnd.randint(3, 6)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rnd.random() < 0.5]
    edges += [tuple(rnd.sample(range(n), 2)) for _ in range(rnd.randint(0, 2))]
    G = graph.Graph(n, tuple(edges))
    S = sorted(rnd.sample(range(n), rnd.randint(1, min(3, n - 1))))
    return G, S


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_mu_plus_reduction_matches_bruteforce(seed):
    G, S = _random_block(seed)
    shape = blocks.block_shape(G, S)
    q = min(len(S) + len(graph.boundary(G, S)), 4)
    assert blocks.mu_plus_shape(shape, q_cap=q) == blocks.mu_plus_bruteforce(G, S, q)


def test_mu_plus_is_shape_invariant():
    C = graph.cycle_graph(8)
    a = blocks.mu_plus_shape(blocks.block_shape(C, [0, 1]))
    b = blocks.mu_plus_shape(blocks.block_shape(C, [4, 5]))
    assert a == b


def test_block_params_fallback():
    G = graph.toroidal_grid(6)
    prm = blocks.block_params(G, blocks.grid_blocks(G, 4))
    assert not prm.mu_plus_exact and prm.mu_plus == 4
    prm = blocks.block_params(G, blocks.grid_blocks(G, 2))
    assert prm.mu_plus_exact and prm.as_dict()["Psi"] == "2"


@pytest.mark.parametrize("r", [1, 2, 3])
def test_grid_isoperimetry(r):
    rep = blocks.grid_isoperimetry(r, L=6)
    assert rep.ok and rep.subsets == 2 ** (r * r)
    assert 1 in rep.tight_sizes
