"""Loopless multigraphs, generators and the subset metrics used elsewhere.

Vertices are the integers ``0..n-1``. Edges are stored as a sorted tuple of
``(u, v)`` pairs with ``u < v``; parallel edges appear once per copy.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .budgets import budget
from .errors import CapacityError, LoopError, ParameterError, RangeError

Edge = tuple[int, int]
VertexSet = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[Edge, ...]
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(
        init=False, repr=False, compare=False
    )
    max_degree: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"vertex count must be nonnegative, got {self.n}")
        normalised = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise RangeError(f"edge ({u}, {v}) has a label outside 0..{self.n - 1}")
            if u == v:
                raise LoopError(f"loop at vertex {u}")
            normalised.append((u, v) if u < v else (v, u))
        normalised.sort()
        object.__setattr__(self, "edges", tuple(normalised))

        mult: list[Counter] = [Counter() for _ in range(self.n)]
        for u, v in normalised:
            mult[u][v] += 1
            mult[v][u] += 1
        adjacency = tuple(tuple(sorted(c.items())) for c in mult)
        object.__setattr__(self, "adjacency", adjacency)
        degrees = [sum(k for _, k in row) for row in adjacency]
        object.__setattr__(self, "max_degree", max(degrees, default=0))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum(k for _, k in self.adjacency[v])

    def neighbours(self, v: int) -> tuple[int, ...]:
        """Distinct neighbours of ``v`` in ascending order."""
        return tuple(w for w, _ in self.adjacency[v])

    def multiplicity(self, u: int, v: int) -> int:
        for w, k in self.adjacency[u]:
            if w == v:
                return k
        return 0

    def is_simple(self) -> bool:
        return all(k == 1 for row in self.adjacency for _, k in row)


def build_from_edge_list(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    return Graph(n, tuple((int(e[0]), int(e[1])) for e in edges))


def vertex_set(G: Graph, members: Iterable[int]) -> VertexSet:
    """Validate and normalise a vertex subset to a sorted duplicate-free tuple."""
    out = tuple(sorted(set(int(v) for v in members)))
    if out and (out[0] < 0 or out[-1] >= G.n):
        raise RangeError(f"vertex set {out} not within 0..{G.n - 1}")
    return out


# ---------------------------------------------------------------------------
# deterministic generators
# ---------------------------------------------------------------------------


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ParameterError("a simple cycle needs at least 3 vertices")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(itertools.combinations(range(n), 2)))


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def double_broom(left: int, spine: int, right: int) -> Graph:
    """A path on ``spine`` vertices with ``left`` leaves on its first vertex and
    ``right`` leaves on its last."""
    if spine < 1:
        raise ParameterError("the spine needs at least one vertex")
    edges = [(i, i + 1) for i in range(spine - 1)]
    nxt = spine
    for anchor, count in ((0, left), (spine - 1, right)):
        for _ in range(count):
            edges.append((anchor, nxt))
            nxt += 1
    return Graph(nxt, tuple(edges))


def disjoint_union(G: Graph, H: Graph) -> Graph:
    return Graph(G.n + H.n, G.edges + tuple((u + G.n, v + G.n) for u, v in H.edges))


def toroidal_grid(L: int) -> Graph:
    """The L x L torus; vertex ``(a, b)`` has label ``a * L + b``."""
    if L < 3:
        raise ParameterError(f"toroidal grid needs L >= 3, got {L}")
    edges = []
    for a in range(L):
        for b in range(L):
            v = a * L + b
            edges.append((v, ((a + 1) % L) * L + b))
            edges.append((v, a * L + (b + 1) % L))
    return Graph(L * L, tuple(edges))


def extremal_graph(n: int, m: int, delta: int) -> Graph:
    """H(n, m, delta): m/delta disjoint pairs, each joined by delta parallel edges."""
    if delta < 1 or m % delta != 0:
        raise ParameterError(f"delta={delta} must divide m={m}")
    pairs = m // delta
    if 2 * pairs > n:
        raise ParameterError(f"{pairs} disjoint pairs do not fit on {n} vertices")
    edges = [(2 * i, 2 * i + 1) for i in range(pairs) for _ in range(delta)]
    return Graph(n, tuple(edges))


def is_extremal_shape(G: Graph, delta: int) -> bool:
    """True when G is isomorphic to H(G.n, G.m, delta)."""
    counts = Counter(G.edges)
    touched = [v for e in counts for v in e]
    return all(k == delta for k in counts.values()) and len(touched) == len(set(touched))


# ---------------------------------------------------------------------------
# random regular graphs (configuration model with rejection)
# ---------------------------------------------------------------------------


def _pairing_batch(n: int, d: int, size: int, rng: np.random.Generator):
    """Draw ``size`` uniform pairings of n buckets of d points.

    Returns the projected vertex pairs, shape (size, n*d/2, 2) with the smaller
    endpoint first, and a boolean mask of the pairings whose multigraph is simple.
    """
    points = np.tile(np.arange(n * d), (size, 1))
    points = rng.permuted(points, axis=1) // d
    a, b = points[:, 0::2], points[:, 1::2]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = np.sort(lo * n + hi, axis=1)
    loop_free = ~(lo == hi).any(axis=1)
    no_multi = ~(keys[:, 1:] == keys[:, :-1]).any(axis=1)
    return np.stack([lo, hi], axis=2), loop_free & no_multi


def _check_regular_params(n: int, d: int):
    if (n * d) % 2:
        raise ParameterError(f"n*d = {n * d} must be even")
    if not 0 <= d < n:
        raise ParameterError(f"degree {d} must satisfy 0 <= d < n = {n}")


def random_regular(n: int, d: int, seed: int | np.random.Generator, batch: int = 64) -> Graph:
    """A uniformly random simple d-regular graph on ``0..n-1``.

    Pairings are drawn in batches and the first simple one is kept, which
    preserves exact uniformity: every simple graph arises from ``(d!)^n``
    pairings.
    """
    _check_regular_params(n, d)
    rng = np.random.default_rng(seed)
    while True:
        pairs, ok = _pairing_batch(n, d, batch, rng)
        hits = np.flatnonzero(ok)
        if hits.size:
            return Graph(n, tuple(map(tuple, pairs[hits[0]].tolist())))


def random_regular_many(n: int, d: int, count: int, seed: int, batch: int = 4096) -> list[Graph]:
    _check_regular_params(n, d)
    rng = np.random.default_rng(seed)
    out: list[Graph] = []
    while len(out) < count:
        pairs, ok = _pairing_batch(n, d, batch, rng)
        for i in np.flatnonzero(ok)[: count - len(out)]:
            out.append(Graph(n, tuple(map(tuple, pairs[i].tolist()))))
    return out


def simple_pairing_rate(n: int, d: int, trials: int, seed: int) -> float:
    """Fraction of uniform pairings whose projected multigraph is simple."""
    _check_regular_params(n, d)
    rng = np.random.default_rng(seed)
    _, ok = _pairing_batch(n, d, trials, rng)
    return float(ok.mean())


# ---------------------------------------------------------------------------
# subset metrics
# ---------------------------------------------------------------------------


def boundary(G: Graph, S: Iterable[int]) -> VertexSet:
    """Vertices outside S with at least one neighbour in S."""
    inside = set(vertex_set(G, S))
    out = {w for v in inside for w in G.neighbours(v) if w not in inside}
    return tuple(sorted(out))


def vol(G: Graph, T: Iterable[int], T_prime: Iterable[int]) -> int:
    """Edges inside T' with at least one endpoint in T, counted with multiplicity."""
    t = set(vertex_set(G, T))
    tp = set(vertex_set(G, T_prime))
    if not t <= tp:
        raise ParameterError("vol(T, T') needs T to be a subset of T'")
    return sum(1 for u, v in G.edges if u in tp and v in tp and (u in t or v in t))


def interior_edges(G: Graph, S: Iterable[int]) -> int:
    s = set(vertex_set(G, S))
    return sum(1 for u, v in G.edges if u in s and v in s)


def cut_edges(G: Graph, A: Iterable[int]) -> int:
    a = set(vertex_set(G, A))
    return sum(1 for u, v in G.edges if (u in a) != (v in a))


def alpha_r(G: Graph, r: int, limit: int | None = None) -> Fraction:
    """max over r-subsets S of e_G(S) / r, by exhaustive enumeration."""
    if not 1 <= r <= G.n / 2:
        raise ParameterError(f"r={r} must satisfy 1 <= r <= n/2 = {G.n / 2}")
    limit = budget("subsets") if limit is None else limit
    count = math.comb(G.n, r)
    if count > limit:
        raise CapacityError("alpha_r subsets", count, limit)
    best = 0
    for S in itertools.combinations(range(G.n), r):
        s = set(S)
        e = sum(1 for u, v in G.edges if u in s and v in s)
        if e > best:
            best = e
    return Fraction(best, r)


def induced_subgraph(G: Graph, A: Sequence[int]) -> Graph:
    """G[A] relabelled so that ``A[i]`` becomes vertex ``i``."""
    index = {v: i for i, v in enumerate(A)}
    return Graph(
        len(A),
        tuple((index[u], index[v]) for u, v in G.edges if u in index and v in index),
    )


def components(G: Graph) -> list[list[int]]:
    uf = _UnionFind(G.n)
    for u, v in G.edges:
        uf.union(u, v)
    groups: dict[int, list[int]] = {}
    for v in range(G.n):
        groups.setdefault(uf.find(v), []).append(v)
    return sorted(groups.values())


def is_connected(G: Graph) -> bool:
    return G.n <= 1 or len(components(G)) == 1


def is_forest(G: Graph) -> bool:
    uf = _UnionFind(G.n)
    return all(uf.union(u, v) for u, v in G.edges)


# ---------------------------------------------------------------------------
# forest decomposition
# ---------------------------------------------------------------------------


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


@dataclass(frozen=True)
class ForestDecomposition:
    """Exactly ``max_degree`` forests, each a tuple of indices into ``graph.edges``."""

    graph: Graph
    forests: tuple[tuple[int, ...], ...]

    def edge_sets(self) -> list[list[Edge]]:
        return [[self.graph.edges[i] for i in f] for f in self.forests]

    def sizes(self) -> list[int]:
        return [len(f) for f in self.forests]


def forest_decomposition(G: Graph) -> ForestDecomposition:
    """Split E(G) into Delta forests whose sizes differ by at most one.

    First peel off maximal spanning forests greedily (lowest-labelled edges
    first); each round lowers the maximum degree, so Delta rounds empty the
    graph. Then, while two forests differ in size by two or more, move an edge
    of the larger one that joins two components of the smaller one.
    """
    delta = G.max_degree
    remaining = list(range(G.m))
    forests: list[list[int]] = []
    for _ in range(delta):
        uf = _UnionFind(G.n)
        taken, rest = [], []
        for i in remaining:
            (taken if uf.union(*G.edges[i]) else rest).append(i)
        forests.append(taken)
        remaining = rest
    if remaining:
        raise AssertionError("greedy forest peeling left edges behind")

    while forests:
        sizes = [len(f) for f in forests]
        big = sizes.index(max(sizes))
        small = sizes.index(min(sizes))
        if sizes[big] - sizes[small] < 2:
            break
        uf = _UnionFind(G.n)
        for i in forests[small]:
            uf.union(*G.edges[i])
        for pos, i in enumerate(forests[big]):
            u, v = G.edges[i]
            if uf.find(u) != uf.find(v):
                forests[small].append(forests[big].pop(pos))
                forests[small].sort()
                break
        else:  # pragma: no cover - excluded by the component-count argument
            raise AssertionError("no transferable edge between unbalanced forests")

    return ForestDecomposition(G, tuple(tuple(f) for f in forests))


# ---------------------------------------------------------------------------
# edge-list files
# ---------------------------------------------------------------------------


def format_edge_list(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"] + [f"{u} {v}" for u, v in G.edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse the ``n m`` + ``u v`` lines format; ``#`` lines are ignored."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ParameterError("edge list must start with a 'n m' header line")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise ParameterError(f"header announces {m} edges but {len(body)} follow")
    edges = []
    for row in body:
        if len(row) != 2:
            raise ParameterError(f"malformed edge line: {' '.join(row)}")
        edges.append((int(row[0]), int(row[1])))
    return build_from_edge_list(n, edges)


def read_edge_list(path) -> Graph:
    with open(path) as fh:
        return parse_edge_list(fh.read())


def write_edge_list(G: Graph, path, header: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(format_edge_list(G))
