"""Potts weights, exact partition functions and the small distributions built on them.

Two arithmetic modes are supported. When the activity is given as an integer,
a :class:`~fractions.Fraction` or a ``"a/b"`` string every weight is an exact
rational; when it is a float, weights are doubles and partition functions are
reported in log space.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

from .budgets import budget
from .errors import CapacityError, ParameterError, RangeError
from .graph import Graph, build_from_edge_list, is_forest, vertex_set

Configuration = tuple[int, ...]
Number = Fraction | float


def as_activity(value) -> Number:
    """Coerce an activity to an exact Fraction when possible, else a float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError("activity must be a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            return float(value)
    return float(value)


@dataclass(frozen=True)
class ModelParams:
    """Activity ``lam`` and palette size ``q``.

    ``lam >= 1`` is accepted here; the dynamics additionally insist on
    ``lam > 1``.
    """

    lam: Number
    q: int

    def __post_init__(self):
        lam = as_activity(self.lam)
        object.__setattr__(self, "lam", lam)
        if not isinstance(self.q, int) or self.q < 2:
            raise ParameterError(f"q must be an integer >= 2, got {self.q!r}")
        if not lam >= 1:
            raise ParameterError(f"activity must satisfy lambda >= 1, got {lam}")

    @property
    def exact(self) -> bool:
        return isinstance(self.lam, Fraction)

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    def powers(self, k: int) -> list[Number]:
        """``[lam**0, ..., lam**k]``."""
        out = [Fraction(1) if self.exact else 1.0]
        for _ in range(k):
            out.append(out[-1] * self.lam)
        return out


def require_ferromagnetic(p: ModelParams) -> None:
    if not p.lam > 1:
        raise ParameterError(f"dynamics need lambda > 1, got {p.lam}")


# ---------------------------------------------------------------------------
# configurations and the state space [q]^n
# ---------------------------------------------------------------------------


def check_configuration(G: Graph, q: int, X: Sequence[int]) -> Configuration:
    X = tuple(int(c) for c in X)
    if len(X) != G.n:
        raise ParameterError(f"configuration has length {len(X)}, graph has {G.n} vertices")
    if any(not 0 <= c < q for c in X):
        raise RangeError(f"configuration {X} uses a colour outside 0..{q - 1}")
    return X


def format_configuration(X: Sequence[int]) -> str:
    return ",".join(str(c) for c in X)


def parse_configuration(text: str) -> Configuration:
    text = text.strip()
    return tuple(int(c) for c in text.split(",")) if text else ()


def state_count(n: int, q: int) -> int:
    return q**n


def encode(X: Sequence[int], q: int) -> int:
    """Index of X in lexicographic order (vertex 0 most significant)."""
    idx = 0
    for c in X:
        idx = idx * q + c
    return idx


def decode(index: int, n: int, q: int) -> Configuration:
    out = [0] * n
    for v in range(n - 1, -1, -1):
        index, out[v] = divmod(index, q)
    return tuple(out)


def all_configurations(n: int, q: int) -> Iterable[Configuration]:
    """All of [q]^n in index order."""
    return itertools.product(range(q), repeat=n)


def digit_matrix(n: int, q: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows are the configurations with indices ``start..stop-1``."""
    stop = q**n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for v in range(n - 1, -1, -1):
        idx, out[:, v] = np.divmod(idx, q)
    return out


def _check_states(n: int, q: int, limit: int | None, what: str = "configurations") -> int:
    limit = budget("states") if limit is None else limit
    size = q**n
    if size > limit:
        raise CapacityError(what, size, limit)
    return size


def mono_edges(G: Graph, X: Sequence[int]) -> int:
    """Number of monochromatic edges, each parallel copy counted separately."""
    return sum(1 for u, v in G.edges if X[u] == X[v])


def mono_histogram(G: Graph, q: int, limit: int | None = None, chunk: int = 1 << 18) -> list[int]:
    """``counts[k]`` = number of configurations in [q]^n with k monochromatic edges.

    Here ``q = 1`` is allowed; it is needed for Z(G[A], lam, q - 1) when q = 2.
    """
    size = _check_states(G.n, q, limit)
    counts = np.zeros(G.m + 1, dtype=np.int64)
    pairs = Counter(G.edges)
    for start in range(0, size, chunk):
        D = digit_matrix(G.n, q, start, min(size, start + chunk))
        mu = np.zeros(D.shape[0], dtype=np.int64)
        for (u, v), k in pairs.items():
            mu += k * (D[:, u] == D[:, v])
        counts += np.bincount(mu, minlength=G.m + 1)
    return [int(c) for c in counts]


def evaluate_weights(counts: Sequence[int], lam: Number) -> Number:
    """Sum of ``counts[k] * lam**k``."""
    total = Fraction(0) if isinstance(lam, Fraction) else 0.0
    power = Fraction(1) if isinstance(lam, Fraction) else 1.0
    for c in counts:
        if c:
            total += c * power
        power *= lam
    return total


def weight_sum(G: Graph, lam: Number, q: int, limit: int | None = None) -> Number:
    """Z(G, lam, q) for any q >= 1, as a plain number in the activity's arithmetic."""
    return evaluate_weights(mono_histogram(G, q, limit), lam)


def partition_function(G: Graph, p: ModelParams, limit: int | None = None) -> Number:
    """Exact Z in exact mode; ``log Z`` (log-sum-exp) in float mode."""
    counts = mono_histogram(G, p.q, limit)
    if p.exact:
        return evaluate_weights(counts, p.lam)
    return log_weight_sum(counts, p.lam)


def log_weight_sum(counts: Sequence[int], lam: float) -> float:
    ks = np.array([k for k, c in enumerate(counts) if c], dtype=float)
    logs = np.log(np.array([c for c in counts if c], dtype=float)) + ks * math.log(lam)
    top = logs.max()
    return float(top + np.log(np.exp(logs - top).sum()))


def log_partition_function(G: Graph, p: ModelParams, limit: int | None = None) -> float:
    counts = mono_histogram(G, p.q, limit)
    return log_weight_sum(counts, float(p.lam))


def gibbs_prob(G: Graph, p: ModelParams, X: Sequence[int], limit: int | None = None) -> Number:
    X = check_configuration(G, p.q, X)
    mu = mono_edges(G, X)
    if p.exact:
        return p.lam**mu / partition_function(G, p, limit)
    return math.exp(mu * math.log(p.lam) - partition_function(G, p, limit))


def gibbs_vector(G: Graph, p: ModelParams, limit: int | None = None) -> list[Number]:
    """pi over all of [q]^n in index order."""
    _check_states(G.n, p.q, limit)
    pw = p.powers(G.m)
    raw = [pw[mono_edges(G, X)] for X in all_configurations(G.n, p.q)]
    Z = sum(raw)
    return [w / Z for w in raw]


# ---------------------------------------------------------------------------
# finite distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """Weights over an ordered finite support.

    ``normalizer`` carries the sum of the unnormalised weights when the
    distribution was built from them (Z_X^v or Z_{X,S}).
    """

    support: tuple
    weights: tuple
    normalizer: Number | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.support) != len(self.weights):
            raise ParameterError("support and weights differ in length")
        if len(set(self.support)) != len(self.support):
            raise ParameterError("support has repeated outcomes")
        if any(w < 0 for w in self.weights):
            raise ParameterError("negative weight")
        total = sum(self.weights)
        if self.exact:
            if total != 1:
                raise ParameterError(f"weights sum to {total}, not 1")
        elif abs(total - 1) > 1e-12:
            raise ParameterError(f"weights sum to {total}, not 1")

    @classmethod
    def from_weights(cls, support: Sequence[Hashable], raw: Sequence[Number]) -> "Distribution":
        Z = sum(raw)
        if isinstance(Z, Fraction):
            return cls(tuple(support), tuple(w / Z for w in raw), Z)
        weights = [w / Z for w in raw]
        # absorb the rounding residue so the float invariant holds exactly
        return cls(tuple(support), tuple(weights), Z)

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights)

    def prob(self, x) -> Number:
        try:
            return self.weights[self.support.index(x)]
        except ValueError:
            raise ParameterError(f"{x!r} is not in the support") from None

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.weights))

    def to_json(self) -> str:
        """``[[index, "weight"], ...]``; exact weights are rendered as ``a/b``."""
        return json.dumps([[i, str(w) if isinstance(w, Fraction) else repr(float(w))]
                           for i, w in enumerate(self.weights)])


def uniform_distribution(support: Sequence[Hashable]) -> Distribution:
    k = len(support)
    return Distribution(tuple(support), tuple(Fraction(1, k) for _ in support), Fraction(k))


def local_distribution(G: Graph, p: ModelParams, X: Sequence[int], v: int) -> Distribution:
    """phi_X^v(c) proportional to lam ** (number of neighbours of v coloured c)."""
    counts = [0] * p.q
    for w, k in G.adjacency[v]:
        counts[X[w]] += k
    pw = p.powers(max(counts))
    return Distribution.from_weights(range(p.q), [pw[c] for c in counts])


def block_incident_edges(G: Graph, S: Sequence[int]) -> list[tuple[int, int]]:
    s = set(S)
    return [(u, v) for u, v in G.edges if u in s or v in s]


def block_mu(G: Graph, X: Sequence[int], S: Sequence[int], c: Sequence[int],
             incident: list[tuple[int, int]] | None = None) -> int:
    """mu_{X,S}(c): monochromatic edges of X^(S,c) touching S."""
    Y = overwrite(X, S, c)
    incident = block_incident_edges(G, S) if incident is None else incident
    return sum(1 for u, v in incident if Y[u] == Y[v])


def block_distribution(G: Graph, p: ModelParams, X: Sequence[int], S: Iterable[int],
                       limit: int | None = None) -> Distribution:
    """phi_{X,S} over [q]^S (block colourings as tuples aligned with sorted S)."""
    S = vertex_set(G, S)
    limit = budget("block") if limit is None else limit
    size = p.q ** len(S)
    if size > limit:
        raise CapacityError(f"block configurations for |S|={len(S)}", size, limit)
    pos = {v: i for i, v in enumerate(S)}
    inner, outer = [], []
    for u, v in G.edges:
        if u in pos and v in pos:
            inner.append((pos[u], pos[v]))
        elif u in pos:
            outer.append((pos[u], X[v]))
        elif v in pos:
            outer.append((pos[v], X[u]))
    pw = p.powers(len(inner) + len(outer))
    support = list(all_configurations(len(S), p.q))
    raw = []
    for c in support:
        mu = sum(1 for a, b in inner if c[a] == c[b]) + sum(1 for a, col in outer if c[a] == col)
        raw.append(pw[mu])
    return Distribution.from_weights(support, raw)


def overwrite(X: Sequence[int], S: Sequence[int], c: Sequence[int]) -> Configuration:
    """X^(S,c): X with the vertices of S (sorted) recoloured by c."""
    Y = list(X)
    for v, col in zip(S, c):
        Y[v] = col
    return tuple(Y)


def tv_distance(phi: Distribution, phi2: Distribution) -> Number:
    """Half the l1 distance. Both supports must contain the same outcomes."""
    if set(phi.support) != set(phi2.support):
        raise ParameterError("total variation needs distributions on a common support")
    other = phi2.as_dict()
    return sum(abs(w - other[x]) for x, w in zip(phi.support, phi.weights)) / 2


def _pick(support: Sequence, weights: Sequence[Number], u: Number):
    acc = 0
    for x, w in zip(support, weights):
        acc += w
        if u < acc:
            return x
    # float round-off at the top end
    return next(x for x, w in zip(reversed(support), reversed(weights)) if w > 0)


def maximal_coupling(phi: Distribution, phi2: Distribution, u: Number):
    """Map one uniform ``u`` in [0, 1) to a pair (x, y) with x ~ phi, y ~ phi2.

    With probability ``1 - TV`` (``u`` below the overlap mass) both coordinates
    are the same draw from the normalised pointwise minimum; otherwise each is
    drawn, with the same rescaled ``u``, from its own residual. The residuals
    have disjoint supports, so P[x == y] = 1 - TV exactly.
    """
    if set(phi.support) != set(phi2.support):
        raise ParameterError("maximal coupling needs distributions on a common support")
    support = phi.support
    other = phi2.as_dict()
    a = phi.weights
    b = [other[x] for x in support]
    mins = [min(x, y) for x, y in zip(a, b)]
    overlap = sum(mins)
    if u < overlap:
        x = _pick(support, mins, u)
        return x, x
    rest = u - overlap
    ra = [x - m for x, m in zip(a, mins)]
    rb = [y - m for y, m in zip(b, mins)]
    return _pick(support, ra, rest), _pick(support, rb, rest)


def coupling_law(phi: Distribution, phi2: Distribution) -> dict:
    """Exact joint law of :func:`maximal_coupling`, integrated over u.

    The sampler is piecewise constant in u with breakpoints at the cumulative
    sums it compares against, so evaluating it at the midpoint of every piece
    and weighting by the piece length integrates it exactly.
    """
    other = phi2.as_dict()
    a = phi.weights
    b = [other[x] for x in phi.support]
    mins = [min(x, y) for x, y in zip(a, b)]
    overlap = sum(mins)
    cuts = {0, 1}
    for seq, base in ((mins, 0), ([x - m for x, m in zip(a, mins)], overlap),
                      ([y - m for y, m in zip(b, mins)], overlap)):
        acc = base
        for w in seq:
            acc += w
            cuts.add(acc)
    cuts = sorted(c for c in cuts if 0 <= c <= 1)
    law: dict = {}
    for lo, hi in zip(cuts, cuts[1:]):
        if hi > lo:
            pair = maximal_coupling(phi, phi2, (lo + hi) / 2)
            law[pair] = law.get(pair, 0) + (hi - lo)
    return law


# ---------------------------------------------------------------------------
# the extremal bound and its oracle
# ---------------------------------------------------------------------------


def extremal_bound(n: int, m: int, delta: int, p: ModelParams) -> Number:
    """(1 + (lam^delta - 1)/q)^ceil(m/delta) * q^n."""
    if delta == 0:
        if m:
            raise ParameterError("a graph with edges has positive maximum degree")
        return Fraction(p.q**n) if p.exact else float(p.q**n)
    base = 1 + (p.lam**delta - 1) / p.q
    return base ** (-(-m // delta)) * p.q**n


def brute_force_max_Z(n: int, m: int, delta: int, p: ModelParams, *, return_all: bool = False,
                      graph_limit: int = 200_000, state_limit: int = 4096):
    """Maximise Z(G, lam, q) over loopless multigraphs with n vertices, m edges
    and maximum degree at most delta.

    Returns ``(Z_max, G)`` for the first maximiser in enumeration order, or
    ``(Z_max, [all maximisers])`` with ``return_all``.
    """
    pairs = list(itertools.combinations(range(n), 2))
    if m and not pairs:
        raise ParameterError("edges need at least two vertices")
    n_multisets = math.comb(len(pairs) + m - 1, m) if pairs else 1
    if n_multisets > graph_limit:
        raise CapacityError("multigraphs to enumerate", n_multisets, graph_limit)
    _check_states(n, p.q, state_limit)

    D = digit_matrix(n, p.q)
    eq = {pr: (D[:, pr[0]] == D[:, pr[1]]).astype(np.int64) for pr in pairs}
    pw = p.powers(m)
    best = None
    winners: list[tuple] = []
    seen: dict[tuple, Number] = {}
    for combo in itertools.combinations_with_replacement(pairs, m):
        deg = [0] * n
        for u, v in combo:
            deg[u] += 1
            deg[v] += 1
        if max(deg, default=0) > delta:
            continue
        mu = np.zeros(D.shape[0], dtype=np.int64)
        for pr in combo:
            mu += eq[pr]
        hist = tuple(np.bincount(mu, minlength=m + 1).tolist())
        if hist not in seen:
            seen[hist] = sum(c * pw[k] for k, c in enumerate(hist) if c)
        z = seen[hist]
        if best is None or z > best:
            best, winners = z, [combo]
        elif z == best:
            winners.append(combo)
    if best is None:
        raise ParameterError(f"no multigraph with n={n}, m={m}, max degree <= {delta}")
    graphs = [build_from_edge_list(n, c) for c in winners]
    return (best, graphs) if return_all else (best, graphs[0])


def binomial_pmf(m: int, prob: Fraction) -> Distribution:
    weights = [math.comb(m, k) * prob**k * (1 - prob) ** (m - k) for k in range(m + 1)]
    return Distribution(tuple(range(m + 1)), tuple(weights))


def forest_mono_pmf(F: Graph, q: int, method: str = "recursion") -> Distribution:
    """Law of the monochromatic-edge count of a forest under a uniform colouring.

    ``recursion`` colours every tree root-first, so each edge independently
    matches its parent with probability 1/q; ``enumerate`` counts all q^n
    colourings directly.
    """
    if not is_forest(F):
        raise ParameterError("forest_mono_pmf needs an acyclic graph")
    if method == "enumerate":
        counts = mono_histogram(F, q)
        total = q**F.n
        return Distribution(tuple(range(F.m + 1)), tuple(Fraction(c, total) for c in counts))
    if method != "recursion":
        raise ParameterError(f"unknown method {method!r}")

    match = Fraction(1, q)
    pmf = [Fraction(1)]
    seen = [False] * F.n
    for root in range(F.n):
        if seen[root]:
            continue
        seen[root] = True
        frontier = [root]
        while frontier:
            v = frontier.pop()
            for w, k in F.adjacency[v]:
                if seen[w]:
                    continue
                seen[w] = True
                frontier.append(w)
                # a forest has no parallel edges, so k == 1
                nxt = [Fraction(0)] * (len(pmf) + 1)
                for j, pj in enumerate(pmf):
                    nxt[j] += pj * (1 - match)
                    nxt[j + 1] += pj * match
                pmf = nxt
    return Distribution(tuple(range(F.m + 1)), tuple(pmf))


def domination_gap(values: Sequence[int], lam: Fraction, d: int) -> Fraction:
    """Largest E[lam^(X_1+...+X_d)] / E[lam^(d X)] over a family of dependent
    vectors with identical marginals.

    X is uniform over the atoms of ``values`` (repeats allowed, so marginals
    need not be uniform on distinct values) and ``X_i = values[pi_i(U)]`` for
    permutations pi_1..pi_d of the atoms, searched exhaustively with pi_1 fixed
    to the identity. The ratio never exceeds 1.
    """
    k = len(values)
    rhs = sum(lam ** (d * x) for x in values)
    best = Fraction(0)
    perms = list(itertools.permutations(range(k)))
    ident = tuple(range(k))
    for rest in itertools.product(perms, repeat=d - 1):
        pis = (ident,) + rest
        lhs = sum(lam ** sum(values[pi[a]] for pi in pis) for a in range(k))
        best = max(best, Fraction(lhs) / rhs)
    return best
