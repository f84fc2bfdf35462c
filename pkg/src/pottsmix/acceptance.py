"""The acceptance suite: one function per criterion, each returning a
:class:`CriterionResult`. Used by ``pottsmix verify`` and the test suite."""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from . import blocks, bounds, conductance, dynamics, gibbs, graph
from .gibbs import ModelParams

EPS_MIX = 1 / (2 * math.e)
LAMBDAS = (Fraction(3, 2), Fraction(2), Fraction(3))


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title} ({self.seconds:.1f}s): {self.detail}"


def corpus() -> list[tuple[str, graph.Graph, int]]:
    """(name, graph, q) with q^n <= 4096."""
    return [
        ("K2", graph.complete_graph(2), 3),
        ("P3", graph.path_graph(3), 3),
        ("P4", graph.path_graph(4), 3),
        ("triangle", graph.complete_graph(3), 3),
        ("C4", graph.cycle_graph(4), 3),
        ("C5", graph.cycle_graph(5), 3),
        ("C6", graph.cycle_graph(6), 3),
        ("K4", graph.complete_graph(4), 3),
        ("star3", graph.star_graph(3), 3),
        ("torus3", graph.toroidal_grid(3), 2),
        ("H(4,3,3)", graph.extremal_graph(4, 3, 3), 3),
    ]


def block_systems(G: graph.Graph) -> list[tuple[str, blocks.BlockSystem]]:
    """Block systems exercised by the stationarity check."""
    out = [
        ("singletons-nonuniform", blocks.singleton_blocks(G, [Fraction(v + 1) / (G.n * (G.n + 1) // 2)
                                                               for v in range(G.n)])),
        ("cyclic-pairs", blocks.custom_blocks(G, [(v, (v + 1) % G.n) for v in range(G.n)])),
    ]
    if graph.is_connected(G) and G.n >= 3:
        out.append(("2-block-bfs", blocks.k_block_bfs(G, 2)))
    return out


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure of that criterion, reported as such
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, title, ok, detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------


def _stationarity() -> tuple[bool, str]:
    checked, bad = 0, []
    for name, G, q in corpus():
        for lam in LAMBDAS:
            p = ModelParams(lam, q)
            pi = gibbs.gibbs_vector(G, p)
            systems = [("glauber", None)] + block_systems(G)
            for sname, system in systems:
                P = dynamics.transition_operator(G, p, system)
                ok = (dynamics.is_stochastic(P) and dynamics.is_stationary(P, pi)
                      and not dynamics.detailed_balance_violations(P, pi))
                checked += 1
                if not ok:
                    bad.append(f"{name}/{sname}/lambda={lam}")
    return not bad, f"{checked} operators exact; failures: {bad or 'none'}"


def criterion_1() -> CriterionResult:
    return _timed(1, "exact stationarity and detailed balance", _stationarity)


def _extremal() -> tuple[bool, str]:
    cases = [(4, 3, 3), (4, 2, 2), (6, 6, 3), (5, 4, 2)]
    params = [(Fraction(2), 2), (Fraction(3), 3), (Fraction(3, 2), 4)]
    bad, notes = [], []
    for n, m, d in cases:
        for lam, q in params:
            p = ModelParams(lam, q)
            best, maximisers = gibbs.brute_force_max_Z(n, m, d, p, return_all=True)
            bound = gibbs.extremal_bound(n, m, d, p)
            if best > bound:
                bad.append(f"({n},{m},{d},{lam},{q}) max {best} > bound {bound}")
            if m % d == 0:
                if best != bound:
                    bad.append(f"({n},{m},{d},{lam},{q}) max {best} != bound {bound}")
                if not any(graph.is_extremal_shape(H, d) for H in maximisers):
                    bad.append(f"({n},{m},{d},{lam},{q}) maximiser is not H(n,m,Delta)")
                if gibbs.partition_function(graph.extremal_graph(n, m, d), p) != best:
                    bad.append(f"({n},{m},{d},{lam},{q}) Z(H) differs from the maximum")
            if (n, m, d, lam, q) == (4, 3, 3, 2, 2):
                notes.append(f"Z_max(4,3,3;2,2) = {best}")
                if best != 72:
                    bad.append(f"(4,3,3,2,2) gave {best}, expected 72")
    return not bad, "; ".join(notes + (bad or ["12 cases consistent"]))


def criterion_2() -> CriterionResult:
    return _timed(2, "extremal partition-function bound", _extremal)


def forest_corpus(max_edges: int = 8) -> list[tuple[str, graph.Graph]]:
    out = []
    for m in range(1, max_edges + 1):
        out.append((f"path{m}", graph.path_graph(m + 1)))
        out.append((f"star{m}", graph.star_graph(m)))
    for left, spine, right in itertools.product(range(1, 4), range(2, 5), range(1, 4)):
        G = graph.double_broom(left, spine, right)
        if G.m <= max_edges:
            out.append((f"broom{left}-{spine}-{right}", G))
    for a, b in itertools.product(range(1, 5), range(1, 5)):
        G = graph.disjoint_union(graph.path_graph(a + 1), graph.star_graph(b))
        if G.m <= max_edges:
            out.append((f"path{a}+star{b}", G))
    out.append(("path2+isolated", graph.disjoint_union(graph.path_graph(3), graph.Graph(2, ()))))
    return out


def _binomial() -> tuple[bool, str]:
    bad, count, enum = [], 0, 0
    for name, F in forest_corpus():
        for q in (2, 3, 4):
            target = gibbs.binomial_pmf(F.m, Fraction(1, q))
            got = gibbs.forest_mono_pmf(F, q)
            count += 1
            if got.weights != target.weights:
                bad.append(f"{name}/q={q}")
            if q**F.n <= 20_000:
                enum += 1
                if gibbs.forest_mono_pmf(F, q, method="enumerate").weights != target.weights:
                    bad.append(f"{name}/q={q}/enumeration")
    return not bad, f"{count} forest/q pairs exact ({enum} also by enumeration); failures: {bad or 'none'}"


def criterion_3() -> CriterionResult:
    return _timed(3, "binomial law of monochromatic forest edges", _binomial)


def random_bounded_graph(seed: int, max_n: int = 30, max_delta: int = 6) -> graph.Graph:
    """A random multigraph with at most ``max_n`` vertices and degrees at most
    a random cap in 1..max_delta (occasional parallel edges)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    cap = int(rng.integers(1, max_delta + 1))
    deg = [0] * n
    edges = []
    for _ in range(int(rng.integers(1, n * cap // 2 + 2))):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        if deg[u] < cap and deg[v] < cap:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    if not edges:
        edges.append((0, 1))
    return graph.build_from_edge_list(n, edges)


def check_forest_decomposition(G: graph.Graph) -> list[str]:
    fd = graph.forest_decomposition(G)
    problems = []
    if len(fd.forests) != G.max_degree:
        problems.append("wrong number of forests")
    used = sorted(i for f in fd.forests for i in f)
    if used != list(range(G.m)):
        problems.append("not a partition of the edges")
    for f in fd.forests:
        if not graph.is_forest(graph.Graph(G.n, tuple(G.edges[i] for i in f))):
            problems.append("cyclic forest")
    lo, hi = G.m // G.max_degree, -(-G.m // G.max_degree)
    if any(not lo <= s <= hi for s in fd.sizes()):
        problems.append(f"unbalanced sizes {fd.sizes()}")
    return problems


def _forests() -> tuple[bool, str]:
    failures = []
    for seed in range(100):
        G = random_bounded_graph(seed)
        if check_forest_decomposition(G):
            failures.append(seed)
    return not failures, f"100 random graphs; failing seeds: {failures or 'none'}"


def criterion_4() -> CriterionResult:
    return _timed(4, "balanced forest decomposition", _forests)


def _coupling() -> tuple[bool, str]:
    notes, bad = [], []
    for name, G, lam, q in (("P4", graph.path_graph(4), Fraction(13, 10), 5),
                            ("C5", graph.cycle_graph(5), Fraction(6, 5), 4)):
        p = ModelParams(lam, q)
        d = G.max_degree
        if q < bounds.rapid_threshold_glauber(d, lam):
            bad.append(f"{name}: hypothesis q >= Delta lam^Delta + 1 fails")
        limit = 1 - Fraction(1, (d + 1) * G.n)
        worst = max(dynamics.contraction_exact(G, p, pair) for pair in dynamics.adjacent_pairs(G.n, q))
        notes.append(f"{name} worst {worst} <= {limit}")
        if worst > limit:
            bad.append(f"{name}: {worst} > {limit}")
    gcount = 0
    for delta in range(1, 7):
        for q in range(2, 11):
            for lam in LAMBDAS:
                p = ModelParams(lam, q)
                gcount += 1
                if dynamics.worst_local_tv_bruteforce(delta, p) > dynamics.local_tv_bound(delta, p):
                    bad.append(f"g(lam={lam}, q={q}) exceeds bound at Delta={delta}")
    notes.append(f"g(lam,q) bound holds on {gcount - len([b for b in bad if b.startswith('g(')])}/{gcount}")
    return not bad, "; ".join(notes + bad)


def criterion_5() -> CriterionResult:
    return _timed(5, "path-coupling contraction", _coupling)


def _block_params() -> tuple[bool, str]:
    G = graph.toroidal_grid(6)
    bad, notes = [], []
    for r in (2, 3, 4):
        system = blocks.grid_blocks(G, r)
        Psi = blocks.psi_ratio(G, system)
        lp = blocks.partial_plus(G, system)
        expected = min(r * r, 4 * r) * math.log(4 * r)
        if Psi != Fraction(4, r):
            bad.append(f"r={r}: Psi={Psi}")
        if not math.isclose(lp, expected, rel_tol=1e-12):
            bad.append(f"r={r}: log dplus={lp} vs {expected}")
        if r <= 3:
            mu = blocks.mu_plus_exact(G, system)
            notes.append(f"grid r={r} mu+={mu}")
            if not (mu <= blocks.mu_plus_upper("grid", r=r) and 2 <= mu <= 4):
                bad.append(f"grid r={r}: mu+={mu}")
    C8 = graph.cycle_graph(8)
    for k in (2, 3, 4):
        mu = blocks.mu_plus_exact(C8, blocks.k_block_bfs(C8, k))
        notes.append(f"C8 k={k} mu+={mu}")
        if mu > blocks.mu_plus_upper("k-block", delta=2, k=k):
            bad.append(f"C8 k={k}: mu+={mu}")
    return not bad, "; ".join(notes + bad)


def criterion_6() -> CriterionResult:
    return _timed(6, "block-system parameters", _block_params)


def _isoperimetry() -> tuple[bool, str]:
    rep = blocks.grid_isoperimetry(3, L=6)
    ok = rep.ok and rep.subsets == 512 and {1, 9} <= set(rep.tight_sizes)
    return ok, (f"{rep.subsets} subsets, {len(rep.violations)} violations, "
                f"tight at |T| in {list(rep.tight_sizes)}")


def criterion_7() -> CriterionResult:
    return _timed(7, "grid isoperimetry", _isoperimetry)


def _conductance() -> tuple[bool, str]:
    bad, notes = [], []
    for name, G in (("K2", graph.complete_graph(2)), ("triangle", graph.complete_graph(3))):
        for lam in (2, 3):
            p = ModelParams(lam, 2)
            chain = (gibbs.gibbs_vector(G, p), dynamics.transition_operator(G, p))
            phi = conductance.global_conductance(G, p).phi
            for r in (0, 1):
                ball = conductance.phi_ball_exact(G, p, r, chain=chain)
                bound = conductance.phi_ball_bound(G, p, r)
                if not phi <= ball <= bound:
                    bad.append(f"{name} lam={lam} r={r}: {phi}, {ball}, {bound}")
            tau = dynamics.mixing_time_exact(G, p, EPS_MIX)
            lower = conductance.conductance_mixing_lower(phi)
            notes.append(f"{name} lam={lam}: Phi={phi}, tau={tau} >= {lower:.3f}")
            if tau < lower:
                bad.append(f"{name} lam={lam}: tau {tau} < {lower}")
    shells = 0
    for name, G, q in corpus():
        p = ModelParams(2, q)
        for r in range(G.n + 1):
            shells += 1
            if conductance.shell_weight(G, p, r) != conductance.shell_weight_enumerated(G, p, r):
                bad.append(f"shell {name} r={r}")
    notes.append(f"{shells} shell sums match enumeration")
    return not bad, "; ".join(notes + bad)


def criterion_8() -> CriterionResult:
    return _timed(8, "conductance pipeline", _conductance)


def _convergence() -> tuple[bool, str]:
    T = graph.toroidal_grid(3)
    curve = dynamics.tv_curve(T, ModelParams(Fraction(6, 5), 2), (0,) * 9, 200)
    t_torus = curve.first_below(EPS_MIX)
    P4 = graph.path_graph(4)
    p = ModelParams(Fraction(13, 10), 5)
    bound = (2 + 1) * 4 * math.log(4 * 2 * math.e)
    tau = dynamics.mixing_time_exact(P4, p, EPS_MIX, exact=False)
    ok = curve.is_nonincreasing(1e-12) and t_torus is not None and tau <= bound
    return ok, (f"torus TV nonincreasing={curve.is_nonincreasing(1e-12)}, below 1/(2e) at t={t_torus}; "
                f"P4 exact tau={tau} <= {bound:.2f}")


def criterion_9() -> CriterionResult:
    return _timed(9, "convergence to stationarity", _convergence)


def _beta0() -> tuple[bool, str]:
    qs = [10**3, 10**4, 10**5, 10**6]
    bad, notes = [], []
    for d in (3, 4, 5):
        for q in qs:
            pt = bounds.double_root(q, d)
            if not (abs(pt.residual_f) <= 1e-10 and abs(pt.residual_fprime) <= 1e-10
                    and 0 < pt.x_star < 1 and pt.B > 0):
                bad.append(f"Delta={d} q={q}: {pt}")
        slope = bounds.beta0_slope(qs, d)
        notes.append(f"Delta={d} slope {slope:.4f} vs {1 / (d - 1):.4f}")
        if abs(slope - 1 / (d - 1)) > 0.05:
            bad.append(f"Delta={d} slope {slope}")
    return not bad, "; ".join(notes + bad)


def criterion_10() -> CriterionResult:
    return _timed(10, "double-root solver", _beta0)


def _constants() -> tuple[bool, str]:
    bad = []
    c = bounds.eta_constants(Fraction(1, 2), 4)
    if c.c1 != 65536:
        bad.append(f"c1(1/2, 4) = {c.c1}")
    for d in (3, 4, 5, 6):
        for lam in (2, 4, 8, 16):
            if not bounds.eta_slow_threshold(Fraction(1, 5), d, lam) < bounds.eta_rapid_threshold(
                    Fraction(1, 5), d, lam):
                bad.append(f"ordering fails at Delta={d}, lambda={lam}")
    w = bounds.grid_separation_witness(Fraction(1, 5))
    if w is None:
        bad.append("no separating (lambda, q) found")
        detail = "no witness"
    else:
        detail = (f"witness log(lambda)={w.log_lam:g}, q with {w.q.bit_length()} bits, "
                  f"log q in ({w.log_lower:.1f}, {w.log_upper:.1f})")
    return not bad, "; ".join(["c1(1/2,4)=65536", "slow < rapid on 16 cells", detail] + bad)


def criterion_11() -> CriterionResult:
    return _timed(11, "threshold constants", _constants)


def regular_census(n: int, d: int) -> list[tuple]:
    """All simple d-regular graphs on n labelled vertices, as sorted edge tuples."""
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for es in itertools.combinations(pairs, n * d // 2):
        deg = Counter(v for e in es for v in e)
        if all(deg[v] == d for v in range(n)):
            out.append(es)
    return out


def _random_regular(seed: int = 20240) -> tuple[bool, str]:
    census = regular_census(6, 3)
    index = {es: i for i, es in enumerate(census)}
    samples = graph.random_regular_many(6, 3, 100_000, seed)
    counts = np.zeros(len(census), dtype=np.int64)
    for G in samples:
        counts[index[G.edges]] += 1       # KeyError would flag a non-simple or non-regular sample
    chi = stats.chisquare(counts)
    trials = 10_000
    rate = graph.simple_pairing_rate(100, 3, trials, seed + 1)
    target = math.exp(-2)
    se = math.sqrt(target * (1 - target) / trials)
    ok = chi.pvalue > 0.01 and abs(rate - target) <= 3 * se
    return ok, (f"census {len(census)} graphs, chi2 p={chi.pvalue:.3f}; "
                f"n=100 acceptance {rate:.4f} vs e^-2={target:.4f} (3 SE = {3 * se:.4f})")


def criterion_12() -> CriterionResult:
    return _timed(12, "random regular generator", _random_regular)


def _reproducibility() -> tuple[bool, str]:
    from .cli import run_simulate_text

    args = dict(graph={"kind": "path", "n": 4}, lam="2", q=3, steps=10, seed=12345)
    first = run_simulate_text(**args)
    second = run_simulate_text(**args)
    same = first == second
    differ = 0
    for s in range(10):
        a = run_simulate_text(**{**args, "seed": 1000 + 2 * s}).splitlines()
        b = run_simulate_text(**{**args, "seed": 1001 + 2 * s}).splitlines()
        body_a = [ln for ln in a if not ln.startswith("#")]
        body_b = [ln for ln in b if not ln.startswith("#")]
        differ += body_a != body_b
    return same and differ == 10, f"same seed identical={same}; {differ}/10 seed pairs differ"


def criterion_13() -> CriterionResult:
    return _timed(13, "reproducible simulation output", _reproducibility)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13]


def run_all(only: set[int] | None = None) -> list[CriterionResult]:
    return [fn() for i, fn in enumerate(CRITERIA, 1) if only is None or i in only]
