"""Glauber and block dynamics: steps, seeded trajectories, exact transition
operators, TV-to-stationarity curves and one-step coupling contraction.

Randomness comes from numpy's PCG64 generator. A chain seeded with ``seed``
uses ``numpy.random.default_rng(seed)``; replica ``r`` of a run uses the
stream ``SeedSequence(seed, spawn_key=(r,))``. Each Glauber step consumes
``rng.integers(n)`` for the vertex and then one ``rng.random()`` for the
colour, inverted against the cumulative conditional weights in colour order.
A block step consumes one ``rng.random()`` for the block (inverted against
psi) and one for the block colouring (inverted in index order).
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .budgets import budget
from .errors import CapacityError, ParameterError
from .gibbs import (Configuration, Distribution, ModelParams, _pick, all_configurations,
                    block_distribution, check_configuration, coupling_law, digit_matrix,
                    encode, local_distribution, maximal_coupling, mono_edges, overwrite,
                    require_ferromagnetic, tv_distance)
from .graph import Graph

if TYPE_CHECKING:
    from .blocks import BlockSystem

DEFAULT_EPSILON = 1 / (2 * math.e)


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replica,))))


# ---------------------------------------------------------------------------
# single steps and trajectories
# ---------------------------------------------------------------------------


def glauber_step(G: Graph, p: ModelParams, X: Sequence[int], rng: np.random.Generator) -> Configuration:
    require_ferromagnetic(p)
    v = int(rng.integers(G.n))
    u = rng.random()
    phi = local_distribution(G, p, X, v)
    Y = list(X)
    Y[v] = _pick(phi.support, phi.weights, u)
    return tuple(Y)


def block_step(G: Graph, p: ModelParams, system: "BlockSystem", X: Sequence[int],
               rng: np.random.Generator) -> Configuration:
    require_ferromagnetic(p)
    idx = _pick(range(len(system.blocks)), system.psi.weights, rng.random())
    S = system.blocks[idx]
    phi = block_distribution(G, p, X, S)
    c = _pick(phi.support, phi.weights, rng.random())
    return overwrite(X, S, c)


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[int, ...]
    configs: tuple[Configuration, ...]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        n = len(self.configs[0]) if self.configs else 0
        w.writerow(["step"] + [f"colour_{i}" for i in range(n)])
        for t, X in zip(self.steps, self.configs):
            w.writerow([t, *X])
        return out.getvalue()


def run_chain(G: Graph, p: ModelParams, start: Sequence[int], steps: int, seed,
              thin: int = 1, system: "BlockSystem | None" = None) -> Trajectory:
    """Run Glauber (or block dynamics when ``system`` is given) from ``start``,
    recording step 0 and every ``thin``-th state after it."""
    require_ferromagnetic(p)
    if steps < 0 or thin < 1:
        raise ParameterError("steps must be >= 0 and thin >= 1")
    X = check_configuration(G, p.q, start)
    rng = make_rng(seed)
    times, configs = [0], [X]
    for t in range(1, steps + 1):
        X = glauber_step(G, p, X, rng) if system is None else block_step(G, p, system, X, rng)
        if t % thin == 0:
            times.append(t)
            configs.append(X)
    return Trajectory(tuple(times), tuple(configs))


# ---------------------------------------------------------------------------
# exact operators
# ---------------------------------------------------------------------------


def _update_rule(G: Graph, system: "BlockSystem | None"):
    """(blocks, selection weights); Glauber is the uniform singleton system."""
    if system is None:
        return [(v,) for v in range(G.n)], [Fraction(1, G.n)] * G.n
    return [tuple(S) for S in system.blocks], list(system.psi.weights)


@dataclass
class ImplicitOperator:
    """P applied to distribution vectors without materialising it.

    For each block S, ``factors[S][y] = phi_{y,S}(y|S)``; a step sends a
    distribution nu to ``sum_S psi(S) * factor_S * (nu summed over the
    coordinates in S)``. Arrays are object-valued Fractions in exact mode.
    """

    n: int
    q: int
    blocks: list
    psi: list
    factors: list
    exact: bool

    @property
    def size(self) -> int:
        return self.q**self.n

    def apply(self, nu: np.ndarray) -> np.ndarray:
        """One step; ``nu`` has shape (q,)*n or (batch,) + (q,)*n."""
        lead = nu.ndim - self.n
        out = None
        for S, w, F in zip(self.blocks, self.psi, self.factors):
            axes = tuple(lead + v for v in S)
            term = (w * F) * nu.sum(axis=axes, keepdims=True)
            out = term if out is None else out + term
        return out

    def point_mass(self, X: Sequence[int]) -> np.ndarray:
        nu = self._zeros(self.size)
        nu[encode(X, self.q)] = 1
        return nu.reshape((self.q,) * self.n)

    def _zeros(self, size):
        if self.exact:
            arr = np.empty(size, dtype=object)
            arr.fill(Fraction(0))
            return arr
        return np.zeros(size)


def _mono_counts(G: Graph, D: np.ndarray, S: Iterable[int] | None = None) -> np.ndarray:
    s = None if S is None else set(S)
    mu = np.zeros(D.shape[0], dtype=np.int64)
    for a, b in G.edges:
        if s is None or a in s or b in s:
            mu += D[:, a] == D[:, b]
    return mu


def implicit_operator(G: Graph, p: ModelParams, system: "BlockSystem | None" = None,
                      exact: bool | None = None, limit: int | None = None) -> ImplicitOperator:
    require_ferromagnetic(p)
    exact = p.exact if exact is None else exact
    if exact and not p.exact:
        raise ParameterError("exact arithmetic needs a rational activity")
    limit = budget("vector") if limit is None else limit
    size = p.q**G.n
    if size > limit:
        raise CapacityError("state vector", size, limit)
    blocks, psi = _update_rule(G, system)
    if not exact:
        psi = [float(w) for w in psi]
    D = digit_matrix(G.n, p.q)
    shape = (p.q,) * G.n
    if exact:
        powers = np.array(p.powers(G.m), dtype=object)
    else:
        powers = float(p.lam) ** np.arange(G.m + 1)
    factors = []
    for S in blocks:
        W = powers[_mono_counts(G, D, S)].reshape(shape)
        Z = W.sum(axis=tuple(S), keepdims=True)
        factors.append(W / Z)
    return ImplicitOperator(G.n, p.q, blocks, psi, factors, exact)


@dataclass
class TransitionOperator:
    """Row-sparse stochastic matrix over [q]^n in index order."""

    q: int
    n: int
    rows: list[dict[int, object]]

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, x: Sequence[int], y: Sequence[int]):
        return self.rows[encode(x, self.q)].get(encode(y, self.q), 0)

    def dense(self) -> np.ndarray:
        M = np.zeros((self.size, self.size))
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                M[i, j] = float(v)
        return M

    def left_apply(self, vec: Sequence) -> list:
        out = [0] * self.size
        for i, row in enumerate(self.rows):
            if vec[i]:
                for j, v in row.items():
                    out[j] += vec[i] * v
        return out


def transition_operator(G: Graph, p: ModelParams, system: "BlockSystem | None" = None,
                        limit: int | None = None) -> TransitionOperator:
    """Exact P (Glauber) or P' (block dynamics when ``system`` is given)."""
    require_ferromagnetic(p)
    limit = budget("dense") if limit is None else limit
    size = p.q**G.n
    if size > limit:
        raise CapacityError("transition operator states", size, limit)
    blocks, psi = _update_rule(G, system)
    if not p.exact:
        psi = [float(w) for w in psi]
    place = [p.q ** (G.n - 1 - v) for v in range(G.n)]
    rows = []
    for idx, X in enumerate(all_configurations(G.n, p.q)):
        row: dict[int, object] = {}
        for S, w in zip(blocks, psi):
            if not w:
                continue
            phi = local_distribution(G, p, X, S[0]) if len(S) == 1 else block_distribution(G, p, X, S)
            base = idx - sum(X[v] * place[v] for v in S)
            for c, prob in zip(phi.support, phi.weights):
                c = (c,) if len(S) == 1 else c
                j = base + sum(col * place[v] for v, col in zip(S, c))
                row[j] = row.get(j, 0) + w * prob
        rows.append(row)
    return TransitionOperator(p.q, G.n, rows)


def is_stochastic(P: TransitionOperator, tol: float | None = None) -> bool:
    for row in P.rows:
        total = sum(row.values())
        if tol is None:
            if total != 1 or any(v < 0 for v in row.values()):
                return False
        elif abs(total - 1) > tol:
            return False
    return True


def is_stationary(P: TransitionOperator, pi: Sequence) -> bool:
    """pi P == pi, exactly."""
    return P.left_apply(pi) == list(pi)


def detailed_balance_violations(P: TransitionOperator, pi: Sequence) -> list[tuple[int, int]]:
    """All (x, y) with pi(x)P(x,y) != pi(y)P(y,x), compared exactly."""
    bad = []
    for i, row in enumerate(P.rows):
        for j, v in row.items():
            if j != i and pi[i] * v != pi[j] * P.rows[j].get(i, 0):
                bad.append((i, j))
    return bad


# ---------------------------------------------------------------------------
# TV curves and mixing times
# ---------------------------------------------------------------------------


def stationary_vector(G: Graph, p: ModelParams, exact: bool) -> np.ndarray:
    """pi as an array of shape (q,)*n."""
    D = digit_matrix(G.n, p.q)
    mu = _mono_counts(G, D)
    if exact:
        W = np.array(p.powers(G.m), dtype=object)[mu]
        pi = W / W.sum()
    else:
        logw = mu * math.log(float(p.lam))
        w = np.exp(logw - logw.max())
        pi = w / w.sum()
    return pi.reshape((p.q,) * G.n)


@dataclass(frozen=True)
class TVCurve:
    times: tuple[int, ...]
    tv: tuple

    def first_below(self, eps) -> int | None:
        for t, d in zip(self.times, self.tv):
            if d <= eps:
                return t
        return None

    def is_nonincreasing(self, tol: float = 0.0) -> bool:
        return all(b <= a + tol for a, b in zip(self.tv, self.tv[1:]))

    def to_csv(self) -> str:
        lines = ["t,tv"]
        for t, d in zip(self.times, self.tv):
            lines.append(f"{t},{d}" if isinstance(d, Fraction) else f"{t},{float(d)!r}")
        return "\n".join(lines) + "\n"


EXACT_CURVE_STATES = 256


def _tv(nu: np.ndarray, pi: np.ndarray, lead: int = 0):
    diff = abs(nu - pi).reshape(nu.shape[:lead] + (-1,))
    return diff.sum(axis=-1) / 2


def tv_curve(G: Graph, p: ModelParams, start, t_max: int, system: "BlockSystem | None" = None,
             exact: bool | None = None, limit: int | None = None) -> TVCurve:
    """TV(P^t(start, .), pi) for t = 0..t_max.

    ``start`` is a configuration or a probability vector over [q]^n in index
    order. Exact rational iteration is used by default only when the activity
    is rational and the state space has at most 256 states, since the
    denominators grow with t; otherwise the iteration is in doubles.
    """
    if exact is None:
        exact = p.exact and p.q**G.n <= EXACT_CURVE_STATES
    op = implicit_operator(G, p, system, exact=exact, limit=limit)
    pi = stationary_vector(G, p, exact)
    shape = (p.q,) * G.n
    if len(start) == G.n and not isinstance(start, np.ndarray):
        nu = op.point_mass(check_configuration(G, p.q, start))
    else:
        nu = np.asarray(start, dtype=object if exact else float)
        if nu.size != op.size:
            raise ParameterError(f"start vector has {nu.size} entries, expected {op.size}")
        nu = nu.reshape(shape)
    tvs = [_tv(nu, pi)]
    for _ in range(t_max):
        nu = op.apply(nu)
        tvs.append(_tv(nu, pi))
    if not exact:
        tvs = [float(x) for x in tvs]
    return TVCurve(tuple(range(t_max + 1)), tuple(tvs))


def mixing_time_exact(G: Graph, p: ModelParams, eps=DEFAULT_EPSILON,
                      starts: Iterable[Sequence[int]] | None = None,
                      system: "BlockSystem | None" = None, exact: bool | None = None,
                      t_max: int = 100_000, limit: int | None = None) -> int:
    """max over ``starts`` of min{t : TV(P^t(x, .), pi) <= eps}.

    With ``starts=None`` every configuration is a start and the result is the
    mixing time itself; for a proper subset of starts it is only a lower bound.
    """
    if eps >= 1:
        return 0
    if exact is None:
        exact = p.exact
    op = implicit_operator(G, p, system, exact=exact, limit=limit)
    pi = stationary_vector(G, p, exact)
    configs = list(all_configurations(G.n, p.q)) if starts is None else [
        check_configuration(G, p.q, X) for X in starts]
    if len(configs) * op.size > (limit or budget("vector")):
        raise CapacityError("start-by-state matrix", len(configs) * op.size, limit or budget("vector"))
    nu = np.stack([op.point_mass(X) for X in configs])
    t = 0
    while True:
        worst = max(_tv(nu, pi, lead=1))
        if worst <= eps:
            return t
        if t >= t_max:
            raise CapacityError("mixing-time iterations", t, t_max)
        nu = op.apply(nu)
        t += 1


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdjacentPair:
    A: Configuration
    B: Configuration
    u: int

    def __post_init__(self):
        A, B = tuple(self.A), tuple(self.B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        diff = [i for i, (a, b) in enumerate(zip(A, B)) if a != b]
        if len(A) != len(B) or diff != [self.u]:
            raise ParameterError("an adjacent pair differs at exactly the vertex u")

    @classmethod
    def from_configs(cls, A: Sequence[int], B: Sequence[int]) -> "AdjacentPair":
        diff = [i for i, (a, b) in enumerate(zip(A, B)) if a != b]
        if len(A) != len(B) or len(diff) != 1:
            raise ParameterError("configurations must differ at exactly one vertex")
        return cls(tuple(A), tuple(B), diff[0])


def adjacent_pairs(n: int, q: int) -> Iterable[AdjacentPair]:
    """Every unordered adjacent pair once (A's colour at u below B's)."""
    for A in all_configurations(n, q):
        for u in range(n):
            for c in range(A[u] + 1, q):
                B = A[:u] + (c,) + A[u + 1:]
                yield AdjacentPair(A, B, u)


def hamming(X: Sequence[int], Y: Sequence[int]) -> int:
    return sum(1 for a, b in zip(X, Y) if a != b)


def coupled_glauber_step(G: Graph, p: ModelParams, pair: AdjacentPair,
                         rng: np.random.Generator) -> tuple[Configuration, Configuration]:
    """Update the same uniform vertex in both copies, colours maximally coupled."""
    require_ferromagnetic(p)
    v = int(rng.integers(G.n))
    u = rng.random()
    a, b = maximal_coupling(local_distribution(G, p, pair.A, v), local_distribution(G, p, pair.B, v), u)
    A, B = list(pair.A), list(pair.B)
    A[v], B[v] = a, b
    return tuple(A), tuple(B)


def contraction_exact(G: Graph, p: ModelParams, pair: AdjacentPair):
    """E[d(A', B')] after one coupled step:
    1 - 1/n + (1/n) * sum over distinct neighbours v of u of TV(phi_A^v, phi_B^v)."""
    n = G.n
    total = sum(tv_distance(local_distribution(G, p, pair.A, v), local_distribution(G, p, pair.B, v))
                for v in G.neighbours(pair.u))
    if p.exact:
        return 1 - Fraction(1, n) + total / n
    return 1 - 1 / n + total / n


def expected_distance_exact(G: Graph, p: ModelParams, A: Sequence[int], B: Sequence[int]):
    """E[d(A', B')] by integrating :func:`coupled_glauber_step` exactly over its
    randomness (vertex and coupling input). Works for any pair of configurations."""
    n = G.n
    total = 0
    for v in range(n):
        law = coupling_law(local_distribution(G, p, A, v), local_distribution(G, p, B, v))
        rest = hamming(A, B) - (A[v] != B[v])
        for (a, b), pr in law.items():
            total += pr * (rest + (a != b))
    return total / n if isinstance(total, Fraction) else total / n


def _partitions(total: int, parts: int, largest: int | None = None):
    """Non-increasing tuples of at most ``parts`` positive integers summing to ``total``."""
    largest = total if largest is None else largest
    if total == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def _local_tv(lam, a: Sequence[int], b: Sequence[int]):
    wa = [lam**x for x in a]
    wb = [lam**x for x in b]
    za, zb = sum(wa), sum(wb)
    return sum(abs(x / za - y / zb) for x, y in zip(wa, wb)) / 2


def worst_local_tv(delta: int, p: ModelParams, max_degree_only: bool = False):
    """g(lam, q): the largest TV between the conditional laws at a vertex of
    degree at most ``delta`` when one neighbour changes colour i -> j.

    Colour counts of the other q-2 colours only matter as a multiset, so the
    search runs over (a_i >= 1, a_j, a partition of the rest).
    """
    q = p.q
    best = 0
    degrees = [delta] if max_degree_only else range(1, delta + 1)
    for d in degrees:
        for ai in range(1, d + 1):
            for aj in range(0, d - ai + 1):
                for rest in _partitions(d - ai - aj, q - 2):
                    others = list(rest) + [0] * (q - 2 - len(rest))
                    a = [ai, aj] + others
                    b = [ai - 1, aj + 1] + others
                    best = max(best, _local_tv(p.lam, a, b))
    return best


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def worst_local_tv_bruteforce(delta: int, p: ModelParams, all_pairs: bool = False):
    """Same maximum as :func:`worst_local_tv`, over every composition of every
    degree up to ``delta``. The moved neighbour goes from colour 0 to colour 1;
    relabelling colours makes every other ordered pair equivalent, and
    ``all_pairs=True`` tries them all anyway."""
    q = p.q
    best = 0
    for d in range(1, delta + 1):
        for a in _compositions(d, q):
            pairs = itertools.permutations(range(q), 2) if all_pairs else [(0, 1)]
            for i, j in pairs:
                if a[i] == 0:
                    continue
                b = list(a)
                b[i] -= 1
                b[j] += 1
                best = max(best, _local_tv(p.lam, a, b))
    return best


def local_tv_bound(delta: int, p: ModelParams):
    """lam^delta / (lam^delta + q - 1)."""
    x = p.lam**delta
    return x / (x + p.q - 1)
