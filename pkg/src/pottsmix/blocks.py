"""Block systems and their parameters: boundary size power, boundary/selection
ratio Psi and the worst monochromatic-edge density mu+.

mu+ is computed without enumerating configurations. For a block S, the value
mu_{X,S}(c) and the free-colour count of c only depend on the colour classes
P of c inside S, on which classes N reuse a boundary colour, and on which
boundary vertices carry each reused colour. For fixed (P, N) the best
boundary colouring gives every boundary vertex the reused colour it has most
edges into, except that each class in N needs at least one boundary vertex of
its own colour; the cheapest way to provide those representatives is a
rectangular assignment problem. Maximising over all (P, N) gives mu+ for the
block exactly, independently of q once q exceeds |S|.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, CoverageError, ParameterError
from .gibbs import Distribution, uniform_distribution
from .graph import Graph, boundary, is_connected, toroidal_grid, vertex_set, vol


@dataclass(frozen=True)
class BlockSystem:
    """Blocks covering 0..n-1 with a selection distribution over block indices."""

    n: int
    blocks: tuple[tuple[int, ...], ...]
    psi: Distribution
    kind: str = "custom"

    def __post_init__(self):
        blocks = tuple(tuple(sorted(set(S))) for S in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ParameterError("a block system needs at least one block")
        if any(not S for S in blocks):
            raise ParameterError("blocks must be nonempty")
        if any(v < 0 or v >= self.n for S in blocks for v in S):
            raise ParameterError("block vertex out of range")
        if self.psi.support != tuple(range(len(blocks))):
            raise ParameterError("psi must be indexed by block position")
        covered = set().union(*(S for S, w in zip(blocks, self.psi.weights) if w > 0))
        if len(covered) != self.n:
            missing = sorted(set(range(self.n)) - covered)
            raise CoverageError(f"vertices {missing} lie in no block of positive weight")

    @property
    def max_size(self) -> int:
        return max(len(S) for S in self.blocks)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "n": self.n, "blocks": [list(S) for S in self.blocks],
                           "psi": [str(w) for w in self.psi.weights]})

    @classmethod
    def from_json(cls, text: str) -> "BlockSystem":
        d = json.loads(text)
        weights = tuple(Fraction(w) for w in d["psi"])
        psi = Distribution(tuple(range(len(weights))), weights)
        n = d.get("n", 1 + max(v for S in d["blocks"] for v in S))
        return cls(n, tuple(tuple(S) for S in d["blocks"]), psi, d.get("kind", "custom"))


def custom_blocks(G: Graph, blocks: Iterable[Iterable[int]], psi: Sequence | None = None,
                  kind: str = "custom") -> BlockSystem:
    blocks = [vertex_set(G, S) for S in blocks]
    if psi is None:
        dist = uniform_distribution(range(len(blocks)))
    else:
        dist = Distribution(tuple(range(len(blocks))), tuple(Fraction(w) for w in psi))
    return BlockSystem(G.n, tuple(blocks), dist, kind)


def singleton_blocks(G: Graph, psi: Sequence | None = None) -> BlockSystem:
    return custom_blocks(G, [(v,) for v in range(G.n)], psi, kind="singleton")


def edge_blocks(G: Graph) -> BlockSystem:
    """One two-vertex block per distinct edge, chosen uniformly."""
    pairs = sorted(set(G.edges))
    return custom_blocks(G, pairs, kind="edge")


def k_block_bfs(G: Graph, k: int) -> BlockSystem:
    """S_v = the first k vertices reached by breadth-first search from v,
    neighbours visited in increasing label order; psi uniform."""
    if not is_connected(G):
        raise ParameterError("k-block systems need a connected graph")
    if not 2 <= k <= G.n - 1:
        raise ParameterError(f"k must satisfy 2 <= k <= n-1 = {G.n - 1}, got {k}")
    blocks = []
    for v in range(G.n):
        seen, order, queue = {v}, [v], deque([v])
        while queue and len(order) < k:
            x = queue.popleft()
            for w, _ in G.adjacency[x]:
                if w not in seen and len(order) < k:
                    seen.add(w)
                    order.append(w)
                    queue.append(w)
        blocks.append(order)
    return custom_blocks(G, blocks, kind=f"k-block({k})")


def grid_side(G: Graph) -> int:
    L = math.isqrt(G.n)
    if L * L != G.n or L < 3 or G != toroidal_grid(L):
        raise ParameterError("graph is not a toroidal grid")
    return L


def grid_blocks(G: Graph, r: int) -> BlockSystem:
    """All r x r subgrids of the toroidal L-grid, one per top-left corner."""
    L = grid_side(G)
    if not 1 <= r <= L - 2:
        raise ParameterError(f"grid blocks need 1 <= r <= L-2 = {L - 2}, got {r}")
    blocks = []
    for a in range(L):
        for b in range(L):
            blocks.append([((a + i) % L) * L + (b + j) % L for i in range(r) for j in range(r)])
    return custom_blocks(G, blocks, kind=f"grid({r})")


# ---------------------------------------------------------------------------
# the three parameters
# ---------------------------------------------------------------------------


def partial_plus_value(G: Graph, system: BlockSystem) -> int:
    """max over blocks of |dS| ** min(|S|, |dS|), as an exact integer."""
    best = 1
    for S in system.blocks:
        d = len(boundary(G, S))
        best = max(best, d ** min(len(S), d))
    return best


def partial_plus(G: Graph, system: BlockSystem) -> float:
    """Natural log of :func:`partial_plus_value`, without forming the integer."""
    best = 0.0
    for S in system.blocks:
        d = len(boundary(G, S))
        if d:
            best = max(best, min(len(S), d) * math.log(d))
    return best


def vertex_weights(G: Graph, system: BlockSystem) -> tuple[list, list]:
    """(psi(v), psi_boundary(v)) for every vertex."""
    inside = [Fraction(0)] * G.n
    edge = [Fraction(0)] * G.n
    for S, w in zip(system.blocks, system.psi.weights):
        for v in S:
            inside[v] += w
        for v in boundary(G, S):
            edge[v] += w
    return inside, edge


def psi_min(G: Graph, system: BlockSystem):
    return min(vertex_weights(G, system)[0])


def psi_ratio(G: Graph, system: BlockSystem) -> Fraction:
    """Psi = max_v psi_boundary(v) / psi(v)."""
    inside, edge = vertex_weights(G, system)
    if any(w == 0 for w in inside):
        raise CoverageError("some vertex is never selected, so Psi is undefined")
    return max(Fraction(e) / i for i, e in zip(inside, edge))


def _set_partitions(items: Sequence[int]):
    """All set partitions of ``items`` (restricted growth order)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


@dataclass(frozen=True)
class BlockShape:
    """What mu+ of a block depends on: multiplicities inside S and from S to dS."""

    size: int
    n_boundary: int
    inner: tuple[tuple[int, int, int], ...]   # (i, j, multiplicity), 0 <= i < j < size
    outer: tuple[tuple[int, int, int], ...]   # (i, b, multiplicity), b indexes dS

    def to_networkx(self) -> nx.Graph:
        H = nx.Graph()
        H.add_nodes_from(range(self.size), role="in")
        H.add_nodes_from((("b", b) for b in range(self.n_boundary)), role="out")
        for i, j, k in self.inner:
            H.add_edge(i, j, mult=k)
        for i, b, k in self.outer:
            H.add_edge(i, ("b", b), mult=k)
        return H

    def invariant(self):
        deg_in = [0] * self.size
        deg_out = [0] * self.n_boundary
        for i, j, k in self.inner:
            deg_in[i] += k
            deg_in[j] += k
        for i, b, k in self.outer:
            deg_in[i] += k
            deg_out[b] += k
        return (self.size, self.n_boundary, tuple(sorted(deg_in)), tuple(sorted(deg_out)),
                len(self.inner), len(self.outer))


def block_shape(G: Graph, S: Iterable[int]) -> BlockShape:
    S = vertex_set(G, S)
    dS = boundary(G, S)
    pos = {v: i for i, v in enumerate(S)}
    bpos = {v: i for i, v in enumerate(dS)}
    inner, outer = {}, {}
    for u, v in G.edges:
        if u in pos and v in pos:
            key = (pos[u], pos[v])
            inner[key] = inner.get(key, 0) + 1
        elif u in pos or v in pos:
            s, b = (u, v) if u in pos else (v, u)
            key = (pos[s], bpos[b])
            outer[key] = outer.get(key, 0) + 1
    return BlockShape(len(S), len(dS), tuple((i, j, k) for (i, j), k in sorted(inner.items())),
                      tuple((i, b, k) for (i, b), k in sorted(outer.items())))


def mu_plus_shape(shape: BlockShape, q_cap: int | None = None) -> Fraction:
    """Exact max over boundary colourings X|dS and c in [q]^S (q = q_cap, or
    unbounded when None) of mu_{X,S}(c) / (|S| - f) with f <= |S| - 1."""
    s, nb = shape.size, shape.n_boundary
    to_b = np.zeros((s, nb), dtype=np.int64)
    for i, b, k in shape.outer:
        to_b[i, b] += k
    best = Fraction(0)
    for P in _set_partitions(list(range(s))):
        if q_cap is not None and len(P) > q_cap:
            continue
        cls = [0] * s
        for idx, C in enumerate(P):
            for i in C:
                cls[i] = idx
        inner_gain = sum(k for i, j, k in shape.inner if cls[i] == cls[j])
        gain = np.array([to_b[C].sum(axis=0) for C in P])  # |P| x nb
        for size_n in range(0, min(len(P), nb) + 1):
            f = len(P) - size_n
            if f > s - 1:
                continue
            if size_n == 0 and nb and q_cap is not None and len(P) >= q_cap:
                continue
            for N in itertools.combinations(range(len(P)), size_n):
                if size_n == 0:
                    total = inner_gain
                else:
                    sub = gain[list(N)]
                    top = np.maximum(sub.max(axis=0), 0)
                    cost = top[None, :] - sub
                    rows, cols = linear_sum_assignment(cost)
                    total = inner_gain + int(top.sum() - cost[rows, cols].sum())
                ratio = Fraction(total, s - f)
                if ratio > best:
                    best = ratio
    return best


def mu_plus_bruteforce(G: Graph, S: Iterable[int], q: int) -> Fraction:
    """Oracle: enumerate every boundary colouring and block colouring over [q]."""
    S = vertex_set(G, S)
    dS = boundary(G, S)
    pos = {v: i for i, v in enumerate(S)}
    bpos = {v: i for i, v in enumerate(dS)}
    inner, outer = [], []
    for u, v in G.edges:
        if u in pos and v in pos:
            inner.append((pos[u], pos[v]))
        elif u in pos:
            outer.append((pos[u], bpos[v]))
        elif v in pos:
            outer.append((pos[v], bpos[u]))
    best = Fraction(0)
    for xb in itertools.product(range(q), repeat=len(dS)):
        on_boundary = set(xb)
        for c in itertools.product(range(q), repeat=len(S)):
            f = len(set(c) - on_boundary)
            if f > len(S) - 1:
                continue
            mu = sum(1 for i, j in inner if c[i] == c[j]) + sum(1 for i, b in outer if c[i] == xb[b])
            best = max(best, Fraction(mu, len(S) - f))
    return best


class _ShapeCache:
    """mu+ per block, shared between blocks with isomorphic shapes."""

    def __init__(self, q_cap):
        self.q_cap = q_cap
        self.buckets: dict = {}

    def value(self, shape: BlockShape) -> Fraction:
        bucket = self.buckets.setdefault(shape.invariant(), [])
        H = shape.to_networkx()
        for H2, val in bucket:
            if nx.is_isomorphic(H, H2, node_match=lambda a, b: a["role"] == b["role"],
                                edge_match=lambda a, b: a["mult"] == b["mult"]):
                return val
        val = mu_plus_shape(shape, self.q_cap)
        bucket.append((H, val))
        return val


def mu_plus_exact(G: Graph, system: BlockSystem, q_cap: int | None = None,
                  max_block: int = 9, max_boundary: int = 16) -> Fraction:
    """mu+ of a block system, exactly. ``q_cap`` limits the palette; None means
    q is large enough not to matter (any q_cap > max block size is equivalent)."""
    cache = _ShapeCache(q_cap)
    best = Fraction(0)
    for S in system.blocks:
        shape = block_shape(G, S)
        if shape.size > max_block:
            raise CapacityError("block size for exact mu+", shape.size, max_block)
        if shape.n_boundary > max_boundary:
            raise CapacityError("block boundary for exact mu+", shape.n_boundary, max_boundary)
        best = max(best, cache.value(shape))
    return best


def mu_plus_upper(kind: str, delta: int | None = None, k: int | None = None,
                  r: int | None = None) -> Fraction:
    """Closed-form upper bounds on mu+: ``k-block`` (delta - 1 + 1/k),
    ``grid`` (2 + 2/r) and ``generic`` (delta)."""
    if kind == "k-block":
        return delta - 1 + Fraction(1, k)
    if kind == "grid":
        return 2 + Fraction(2, r)
    if kind == "generic":
        return Fraction(delta)
    raise ParameterError(f"unknown bound kind {kind!r}")


@dataclass(frozen=True)
class BlockParams:
    s: int
    log_partial_plus: float
    Psi: Fraction
    mu_plus: Fraction
    mu_plus_exact: bool
    psi_min: Fraction

    def as_dict(self) -> dict:
        return {"s": self.s, "log_partial_plus": self.log_partial_plus, "Psi": str(self.Psi),
                "mu_plus": str(self.mu_plus), "mu_plus_exact": self.mu_plus_exact,
                "psi_min": str(self.psi_min)}


def block_params(G: Graph, system: BlockSystem, q_cap: int | None = None) -> BlockParams:
    """All three parameters; mu+ falls back to the maximum degree (an upper
    bound) when exact computation is out of budget."""
    try:
        mu, exact = mu_plus_exact(G, system, q_cap), True
    except CapacityError:
        mu, exact = Fraction(G.max_degree), False
    return BlockParams(system.max_size, partial_plus(G, system), psi_ratio(G, system), mu, exact,
                       psi_min(G, system))


# ---------------------------------------------------------------------------
# grid isoperimetry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsoperimetryReport:
    r: int
    L: int
    subsets: int
    violations: tuple[tuple[int, ...], ...]
    tight_sizes: tuple[int, ...]
    min_slack_ratio: float

    @property
    def ok(self) -> bool:
        return not self.violations


def grid_isoperimetry(r: int, exhaustive_limit: int = 16, L: int | None = None) -> IsoperimetryReport:
    """Check vol(T,T) <= 2t - 2 sqrt(t) and vol(T, S u dS) >= 2t + 2 sqrt(t)
    for every T inside an r x r subgrid S of a torus of side L >= r + 2.

    Both tests are done in integers: a >= 0 and a^2 >= 4t, with a the slack
    before the square-root term. ``min_slack_ratio`` is the smallest
    a / (2 sqrt t) over nonempty T (1 means tight).
    """
    if r * r > exhaustive_limit:
        raise CapacityError("subgrid vertices for exhaustive isoperimetry", r * r, exhaustive_limit)
    L = max(r + 2, 3) if L is None else L
    if L < r + 2:
        raise ParameterError("the torus side must be at least r + 2")
    G = toroidal_grid(L)
    S = [i * L + j for i in range(r) for j in range(r)]
    closure = sorted(set(S) | set(boundary(G, S)))
    violations, tight = [], set()
    ratio = math.inf
    for mask in range(1 << len(S)):
        T = [S[i] for i in range(len(S)) if mask >> i & 1]
        t = len(T)
        a = 2 * t - vol(G, T, T)
        b = vol(G, T, closure) - 2 * t
        if not (a >= 0 and a * a >= 4 * t and b >= 0 and b * b >= 4 * t):
            violations.append(tuple(T))
        if t:
            if a * a == 4 * t and b * b == 4 * t:
                tight.add(t)
            ratio = min(ratio, a / (2 * math.sqrt(t)), b / (2 * math.sqrt(t)))
    return IsoperimetryReport(r, L, 1 << len(S), tuple(violations), tuple(sorted(tight)), ratio)
