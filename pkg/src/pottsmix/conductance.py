"""Conductance of the Glauber chain: flows Q(A, B), Phi(A), the global minimum
at tiny scale, and the r-ball / r-shell bound built from exact shell sums.

Phi(A) = Q(A, A^c) / (pi(A) pi(A^c)) is minimised over every proper nonempty
A, not only over sets with pi(A) <= 1/2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .budgets import budget
from .dynamics import TransitionOperator, transition_operator
from .errors import CapacityError, ParameterError
from .gibbs import (ModelParams, all_configurations, gibbs_vector, mono_edges,
                    partition_function, weight_sum)
from .graph import Graph, induced_subgraph, interior_edges

StateSubset = frozenset


def _chain(G: Graph, p: ModelParams, limit: int | None = None):
    P = transition_operator(G, p, limit=limit)
    return gibbs_vector(G, p), P


def q_flow(G: Graph, p: ModelParams, A: Iterable[int], B: Iterable[int],
           chain: tuple | None = None):
    """Q(A, B) = sum over x in A, y in B of pi(x) P(x, y); sets are state indices."""
    pi, P = chain or _chain(G, p)
    B = set(B)
    return sum((pi[x] * v for x in set(A) for y, v in P.rows[x].items() if y in B), start=0)


def phi_of_set(G: Graph, p: ModelParams, A: Iterable[int], chain: tuple | None = None):
    pi, P = chain or _chain(G, p)
    A = set(A)
    comp = set(range(len(pi))) - A
    pa = sum((pi[x] for x in A), start=0)
    if not A or not comp or pa == 0 or pa == 1:
        raise ParameterError("Phi(A) needs 0 < pi(A) < 1")
    return q_flow(G, p, A, comp, (pi, P)) / (pa * (1 - pa))


@dataclass(frozen=True)
class ConductanceResult:
    phi: object
    argmin: frozenset


def global_conductance(G: Graph, p: ModelParams, limit: int | None = None) -> ConductanceResult:
    """Exact min of Phi(A) over all proper nonempty A of the state space.

    Sets are visited in Gray-code order, so each step moves one state across
    the cut and the flow is updated in O(|Omega|). Arithmetic is in integers
    over a common denominator in exact mode.
    """
    limit = budget("conductance") if limit is None else limit
    N = p.q**G.n
    if N > limit:
        raise CapacityError("states for exhaustive conductance (use phi_of_set on candidate sets)",
                            N, limit)
    pi, P = _chain(G, p)
    flow = [[pi[x] * P.rows[x].get(y, 0) for y in range(N)] for x in range(N)]
    if p.exact:
        den = math.lcm(*(f.denominator for row in flow for f in row), *(w.denominator for w in pi))
        flow = [[int(f * den) for f in row] for row in flow]
        weight = [int(w * den) for w in pi]
        total = den
    else:
        weight, total = pi, 1.0
    inside = [False] * N
    cut = 0          # Q(A, A^c) in scaled units
    mass = 0
    best_num, best_den, best_set = None, None, None
    for step in range(1, 1 << N):
        x = (step & -step).bit_length() - 1       # the bit that flips in the Gray code
        if inside[x]:
            inside[x] = False
            mass -= weight[x]
            cut += sum(flow[y][x] for y in range(N) if inside[y]) - sum(
                flow[x][y] for y in range(N) if not inside[y] and y != x)
        else:
            cut += sum(flow[x][y] for y in range(N) if not inside[y] and y != x) - sum(
                flow[y][x] for y in range(N) if inside[y])
            inside[x] = True
            mass += weight[x]
        if mass == 0 or mass == total:
            continue
        # Phi = cut/total / ((mass/total) (1 - mass/total)) = cut * total / (mass (total - mass))
        num, den2 = cut * total, mass * (total - mass)
        if best_num is None or num * best_den < best_num * den2:
            best_num, best_den = num, den2
            best_set = frozenset(i for i in range(N) if inside[i])
    phi = Fraction(best_num, best_den) if p.exact else best_num / best_den
    return ConductanceResult(phi, best_set)


# ---------------------------------------------------------------------------
# balls and shells
# ---------------------------------------------------------------------------


def ball_states(n: int, q: int, r: int, i: int = 0) -> frozenset:
    """Indices of B_r(i): configurations with at least n - r vertices coloured i."""
    return frozenset(idx for idx, X in enumerate(all_configurations(n, q)) if X.count(i) >= n - r)


def shell_weight(G: Graph, p: ModelParams, r: int, limit: int | None = None):
    """Unnormalised weight of S_r(i): for each r-set A the vertices outside A
    carry colour i and A uses the other q - 1 colours, so the set contributes
    lam^{|E(V \\ A)|} Z(G[A], lam, q - 1)."""
    limit = budget("subsets") if limit is None else limit
    if not 0 <= r <= G.n:
        raise ParameterError(f"r must lie in 0..{G.n}")
    count = math.comb(G.n, r)
    if count > limit:
        raise CapacityError("r-subsets for shell sums", count, limit)
    lam = p.lam
    total = Fraction(0) if p.exact else 0.0
    for A in itertools.combinations(range(G.n), r):
        rest = [v for v in range(G.n) if v not in A]
        total += lam ** interior_edges(G, rest) * weight_sum(induced_subgraph(G, A), lam, p.q - 1)
    return total


def shell_weight_enumerated(G: Graph, p: ModelParams, r: int, i: int = 0, limit: int | None = None):
    """Oracle: the same weight by scanning all of [q]^n."""
    limit = budget("dense") if limit is None else limit
    if p.q**G.n > limit:
        raise CapacityError("configurations for shell enumeration", p.q**G.n, limit)
    pw = p.powers(G.m)
    return sum((pw[mono_edges(G, X)] for X in all_configurations(G.n, p.q) if X.count(i) == G.n - r),
               start=Fraction(0) if p.exact else 0.0)


def shell_weight_mc(G: Graph, p: ModelParams, r: int, samples: int, seed) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of the shell weight: draw a
    uniform r-set A and a uniform colouring of A from the q - 1 other colours,
    and average C(n, r) (q - 1)^r lam^mu of the resulting configuration."""
    rng = np.random.default_rng(seed)
    lam = float(p.lam)
    scale = math.comb(G.n, r) * (p.q - 1) ** r
    edges = np.array(G.edges, dtype=np.int64).reshape(-1, 2)
    vals = np.empty(samples)
    for t in range(samples):
        X = np.zeros(G.n, dtype=np.int64)
        A = rng.choice(G.n, size=r, replace=False)
        X[A] = rng.integers(1, p.q, size=r)
        mu = int((X[edges[:, 0]] == X[edges[:, 1]]).sum())
        vals[t] = scale * lam**mu
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class ShellSums:
    r: int
    i: int
    W_shell: object
    W_ball: object
    Z: object
    Z_exact: bool

    def as_dict(self) -> dict:
        fmt = lambda v: str(v) if isinstance(v, Fraction) else repr(float(v))
        return {"r": self.r, "i": self.i, "W_shell": fmt(self.W_shell), "W_ball": fmt(self.W_ball),
                "Z": fmt(self.Z), "Z_exact": self.Z_exact}


def shell_sums(G: Graph, p: ModelParams, r: int, i: int = 0, z_limit: int | None = None) -> ShellSums:
    """Shell and ball weights at radius r. Z is exact when [q]^n is within
    ``z_limit`` states, otherwise the lower bound q lam^m from the monochromatic
    configurations (flagged by ``Z_exact``)."""
    if not 0 <= i < p.q:
        raise ParameterError(f"colour {i} out of range")
    shells = [shell_weight(G, p, j) for j in range(r + 1)]
    z_limit = budget("states") if z_limit is None else z_limit
    if p.q**G.n <= z_limit and p.exact:
        Z, exact = partition_function(G, p), True
    elif p.q**G.n <= z_limit:
        Z, exact = math.exp(partition_function(G, p)), True
    else:
        Z, exact = p.q * p.lam**G.m, False
    return ShellSums(r, i, shells[-1], sum(shells), Z, exact)


def phi_ball_bound(G: Graph, p: ModelParams, r: int):
    """2 W_shell(r) / W_ball(r), an upper bound on Phi(B_r) whenever
    pi of the ball's complement is at least 1/2."""
    if not 0 <= r < G.n:
        raise ParameterError("phi_ball_bound needs 0 <= r < n (B_n is everything)")
    shells = [shell_weight(G, p, j) for j in range(r + 1)]
    return 2 * shells[-1] / sum(shells)


def phi_ball_exact(G: Graph, p: ModelParams, r: int, i: int = 0, chain: tuple | None = None):
    return phi_of_set(G, p, ball_states(G.n, p.q, r, i), chain)


def conductance_mixing_lower(phi) -> float:
    """(e - 1) / (2 e Phi)."""
    if phi < 0:
        raise ParameterError("conductance must be nonnegative")
    if phi == 0:
        return math.inf
    return (math.e - 1) / (2 * math.e * float(phi))


def complement_edge_violations(G: Graph, r: int, kappa) -> int:
    """Count r-sets A with e(A) <= kappa r but |E(V \\ A)| > m - (Delta - kappa) r
    on a Delta-regular graph (the count is always zero)."""
    delta = G.max_degree
    if any(G.degree(v) != delta for v in range(G.n)):
        raise ParameterError("graph must be regular")
    bad = 0
    for A in itertools.combinations(range(G.n), r):
        if interior_edges(G, A) <= kappa * r:
            rest = [v for v in range(G.n) if v not in A]
            if interior_edges(G, rest) > G.m - (delta - kappa) * r:
                bad += 1
    return bad
