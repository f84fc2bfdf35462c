"""Closed-form thresholds and mixing-time bounds, evaluated in natural-log space.

Conventions: functions named ``log_*`` or documented as "log" return natural
logarithms. Thresholds on q are reported as ``log q*``. Exact integers are
returned only where they are small enough to be useful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import ParameterError, RootNotFoundError

LN2 = math.log(2)


def _ln(x) -> float:
    return math.log(x) if not isinstance(x, Fraction) else math.log(x.numerator) - math.log(x.denominator)


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _check_lam(lam, strict: bool = True):
    if strict and not lam > 1:
        raise ParameterError(f"lambda must exceed 1, got {lam}")
    if not strict and not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")


# ---------------------------------------------------------------------------
# parametrisation
# ---------------------------------------------------------------------------


def beta_to_lambda(beta: float, J: float = 1.0) -> float:
    return math.exp(beta * J)


def lambda_to_beta(lam: float, J: float = 1.0) -> float:
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if J == 0:
        raise ParameterError("coupling J must be nonzero")
    return math.log(lam) / J


def square_lattice_critical_lambda(q: float) -> float:
    """Activity at the square-lattice transition for q colours: 1 + sqrt(q)."""
    if q < 0:
        raise ParameterError(f"q must be nonnegative, got {q}")
    return 1 + math.sqrt(q)


def square_lattice_critical_q(lam: float) -> float:
    """(lambda - 1)^2."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    return (lam - 1) ** 2


# ---------------------------------------------------------------------------
# rapid mixing
# ---------------------------------------------------------------------------


def rapid_threshold_glauber(delta: int, lam):
    """Delta * lambda^Delta + 1 (exact when lambda is rational)."""
    if delta < 2:
        raise ParameterError("Delta must be at least 2")
    _check_lam(lam)
    return delta * lam**delta + 1


def glauber_mixing_bound(delta: int, n: int, eps: float) -> float:
    """(Delta + 1) n ln(n / eps)."""
    return (delta + 1) * n * math.log(n / eps)


def block_threshold(s: int, log_partial_plus: float, Psi, mu_plus, lam) -> float:
    """log of (2s)^(s+1) * dplus * Psi * lambda^mu+ (minus infinity when Psi = 0)."""
    _check_lam(lam)
    if Psi == 0:
        return -math.inf
    return (s + 1) * math.log(2 * s) + log_partial_plus + _ln(Psi) + float(mu_plus) * _ln(lam)


def block_mixing_bound(psi_min, n: int, eps: float) -> float:
    """2 / psi_min * ln(n / eps)."""
    return 2 / float(psi_min) * math.log(n / eps)


def kblock_threshold(delta: int, k: int, lam) -> float:
    """log of 2^(k+1) Delta^(2k) k^(2k+1) lambda^(Delta - 1 + 1/k)."""
    if k < 2:
        raise ParameterError("k-block thresholds need k >= 2")
    _check_lam(lam)
    return ((k + 1) * LN2 + 2 * k * math.log(delta) + (2 * k + 1) * math.log(k)
            + (delta - 1 + 1 / k) * _ln(lam))


def kblock_mixing_bound(n: int, eps: float) -> float:
    return 2 * n * math.log(n / eps)


def best_kblock(delta: int, lam, q: float | None = None, k_max: int = 64) -> tuple[int, float]:
    """(k, log q*) minimising the k-block threshold over 2 <= k <= k_max."""
    options = [(kblock_threshold(delta, k, lam), k) for k in range(2, k_max + 1)]
    val, k = min(options)
    return k, val


def grid_threshold(r: int, lam) -> float:
    """log of 2^(r^2+8r+3) r^(2r^2+4r+1) lambda^(2 + 2/r)."""
    if r < 1:
        raise ParameterError("r must be positive")
    _check_lam(lam)
    return ((r * r + 8 * r + 3) * LN2 + (2 * r * r + 4 * r + 1) * math.log(r)
            + (2 + 2 / r) * _ln(lam))


def grid_block_mixing_bound(n: int, r: int, eps: float) -> float:
    return 2 * n * math.log(n / eps) / (r * r)


# ---------------------------------------------------------------------------
# comparison bounds (all returned as natural logs of step counts)
# ---------------------------------------------------------------------------


def log_comparison_bound(s: int, delta: int, q: int, lam, n: int, eps: float, tau_block: float) -> float:
    """log of 2s q^(s+1) lambda^(Delta(s+1)) tau' n (n log(q lambda^(Delta/2)) + log(1/eps))."""
    ll = _ln(lam)
    return (math.log(2 * s) + (s + 1) * math.log(q) + delta * (s + 1) * ll + math.log(tau_block)
            + math.log(n) + math.log(n * (math.log(q) + delta / 2 * ll) + math.log(1 / eps)))


def log_glauber_bound_any_q(s: int, delta: int, q: int, lam, n: int, eps: float,
                        tau_block: float) -> tuple[str, float]:
    """(branch, log bound): the q-free comparison branch below Delta*lambda^Delta + 1,
    the single-site coupling bound at or above it."""
    if q >= rapid_threshold_glauber(delta, lam):
        return "coupling", math.log(glauber_mixing_bound(delta, n, eps))
    ll = _ln(lam)
    value = (math.log(2 * s) + (s + 1) * (math.log(delta) + 2 * delta * ll) + math.log(tau_block)
             + math.log(n) + math.log(n * (math.log(delta) + 1.5 * delta * ll) + math.log(1 / eps)))
    return "comparison", value


def log_glaubercompare_bound(k: int, delta: int, lam, n: int, eps: float) -> float:
    """log of 4k (Delta lambda^(2 Delta))^(k+1) n^2 log(2en) (n log(Delta lambda^(3Delta/2)) + log(1/eps))."""
    ll = _ln(lam)
    return (math.log(4 * k) + (k + 1) * (math.log(delta) + 2 * delta * ll) + 2 * math.log(n)
            + math.log(math.log(2 * math.e * n))
            + math.log(n * (math.log(delta) + 1.5 * delta * ll) + math.log(1 / eps)))


def log_glaubergrid_bound(r: int, lam, n: int, eps: float) -> float:
    """log of 4 (4 lambda^8)^(r^2+1) n^2 log(2en) (n log(4 lambda^6) + log(1/eps))."""
    ll = _ln(lam)
    return (math.log(4) + (r * r + 1) * (math.log(4) + 8 * ll) + 2 * math.log(n)
            + math.log(math.log(2 * math.e * n)) + math.log(n * (math.log(4) + 6 * ll) + math.log(1 / eps)))


def coupling_time_bound(n: int, eps: float, beta: float) -> float:
    """log(n/eps) / (1 - beta): the path-coupling bound for contraction beta < 1."""
    if not beta < 1:
        raise ParameterError("path coupling needs contraction below 1")
    return math.log(n / eps) / (1 - beta)


# ---------------------------------------------------------------------------
# slow mixing
# ---------------------------------------------------------------------------


def _check_kappa(kappa, delta):
    if delta < 3:
        raise ParameterError("slow-mixing formulas need Delta >= 3")
    if not 1 < kappa <= delta / 2:
        raise ParameterError(f"kappa must lie in (1, Delta/2], got {kappa}")


def slow_beta(kappa: float, delta: int) -> float:
    """1/2 e^-(1 + 2/(kappa-1)) (Delta / 2kappa)^-(1 + 1/(kappa-1))."""
    _check_kappa(kappa, delta)
    a = 1 / (kappa - 1)
    return 0.5 * math.exp(-(1 + 2 * a) - (1 + a) * math.log(delta / (2 * kappa)))


def slow_q_threshold(beta: float, lam, delta: int, kappa: float) -> float:
    """log of beta^2/(256 e^2) * lambda^(Delta - kappa - kappa^2/(Delta - kappa)),
    the largest admissible value of q - 1."""
    _check_kappa(kappa, delta)
    _check_lam(lam, strict=False)
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    expo = delta - kappa - kappa * kappa / (delta - kappa)
    return 2 * math.log(beta) - math.log(256) - 2 + expo * _ln(lam)


def slow_q_max(beta: float, lam, delta: int, kappa: float) -> float:
    """1 + exp(slow_q_threshold); below 2 the admissible range of q is empty."""
    log_excess = slow_q_threshold(beta, lam, delta, kappa)
    return math.inf if log_excess > 700 else 1 + math.exp(log_excess)


def slow_mixing_lower(beta: float, n: int) -> float:
    """log of 2^(beta n - 4)."""
    return (beta * n - 4) * LN2


def conductance_upper(r: int) -> float:
    """(2 / sqrt(2 pi r)) 2^-r."""
    if r < 1:
        raise ParameterError("r must be positive")
    return 2 / math.sqrt(2 * math.pi * r) * 2.0 ** (-r)


def best_kappa_slow(delta: int, lam, grid: int = 400) -> tuple[float, float]:
    """(kappa, log(q_max - 1)) maximising the slow threshold over kappa.

    This search is an addition of this package; the constants in
    :func:`eta_constants` keep kappa = 1 + eta/5.
    """
    best = (-math.inf, None)
    for kappa in np.linspace(1, delta / 2, grid + 1)[1:]:
        val = slow_q_threshold(slow_beta(kappa, delta), lam, delta, kappa)
        best = max(best, (val, float(kappa)))
    return best[1], best[0]


# ---------------------------------------------------------------------------
# constants of the eta-parametrised thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EtaConstants:
    eta: Fraction
    delta: int
    k: int          # ceil(1/eta), used by c1 and c3
    k_grid: int     # ceil(2/eta), used by c4
    kappa: Fraction
    log_c1: float
    log_c2: float | None   # None when Delta < 3
    log_c3: float
    log_c4: float
    log_c5: float
    c1: int
    c4: int

    def as_dict(self) -> dict:
        return {"eta": str(self.eta), "delta": self.delta, "k": self.k, "k_grid": self.k_grid,
                "kappa": str(self.kappa), "log_c1": self.log_c1, "log_c2": self.log_c2,
                "log_c3": self.log_c3, "log_c4": self.log_c4, "log_c5": self.log_c5}


def _log_c1(k: int, delta: int) -> float:
    return math.log(k) + (k + 1) * LN2 + 2 * k * math.log(delta * k)


def _log_c2(kappa: float, delta: int) -> float:
    a = 1 + 1 / (kappa - 1)
    return -math.log(1024) - 4 * a - 2 * a * math.log(delta / (2 * kappa))


def eta_constants(eta, delta: int) -> EtaConstants:
    eta = _as_fraction(eta)
    if not 0 < eta < 1:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    if delta < 2:
        raise ParameterError("Delta must be at least 2")
    k = math.ceil(1 / eta)
    kg = math.ceil(2 / eta)
    kappa = 1 + eta / 5
    c1 = k * 2 ** (k + 1) * (delta * k) ** (2 * k)
    c4 = (8 * kg - 1) * 2 ** (kg * kg + 8 * kg) * kg ** (2 * kg * kg + 4 * kg)
    log_c4 = math.log(8 * kg - 1) + (kg * kg + 8 * kg) * LN2 + (2 * kg * kg + 4 * kg) * math.log(kg)
    return EtaConstants(eta, delta, k, kg, kappa, _log_c1(k, delta),
                         _log_c2(float(kappa), delta) if delta >= 3 else None,
                         _log_c1(k, 4), log_c4, _log_c2(float(kappa), 4), c1, c4)


def eta_rapid_threshold(eta, delta: int, lam) -> float:
    """log of c1 lambda^(Delta - 1 + eta)."""
    c = eta_constants(eta, delta)
    return c.log_c1 + (delta - 1 + float(c.eta)) * _ln(lam)


def eta_slow_threshold(eta, delta: int, lam) -> float:
    """log of c2 lambda^(Delta - 1 - 1/(Delta-1) - eta)."""
    if delta < 3:
        raise ParameterError("slow-mixing formulas need Delta >= 3")
    c = eta_constants(eta, delta)
    return c.log_c2 + (delta - 1 - 1 / (delta - 1) - float(c.eta)) * _ln(lam)


def degree4_thresholds(eta, log_lam: float) -> dict[str, float]:
    """log thresholds of the maximum-degree-4 rapid, grid and slow regimes at activity e^log_lam."""
    c = eta_constants(eta, 4)
    e = float(c.eta)
    return {"rapid_degree4": c.log_c3 + (3 + e) * log_lam,
            "rapid_grid": c.log_c4 + (2 + e) * log_lam,
            "slow_degree4": c.log_c5 + (8 / 3 - e) * log_lam}


@dataclass(frozen=True)
class GridSeparation:
    """An activity e^log_lam and integer q with c4 lam^(2+eta) < q < c5 lam^(8/3-eta)."""

    log_lam: float
    q: int
    log_lower: float
    log_upper: float


def grid_separation_witness(eta=Fraction(1, 5), log_lams: Sequence[float] | None = None,
                  dps: int = 60) -> GridSeparation | None:
    """Search log-lambda values for an integer q strictly between the grid rapid
    threshold and the degree-4 slow threshold. The comparison is done with
    mpmath at ``dps`` significant digits since q has thousands of digits."""
    c = eta_constants(eta, 4)
    e = mpmath.mpf(c.eta.numerator) / c.eta.denominator
    log_lams = np.arange(0, 20001, 25) if log_lams is None else log_lams
    with mpmath.workdps(dps):
        log_c4 = mpmath.log(c.c4)
        a = 1 + 1 / (mpmath.mpf(c.kappa.numerator) / c.kappa.denominator - 1)
        kappa = mpmath.mpf(c.kappa.numerator) / c.kappa.denominator
        log_c5 = -mpmath.log(1024) - 4 * a - 2 * a * mpmath.log(4 / (2 * kappa))
        for L in log_lams:
            L = mpmath.mpf(float(L))
            lo = log_c4 + (2 + e) * L
            hi = log_c5 + (mpmath.mpf(8) / 3 - e) * L
            if hi - lo <= 1:
                continue
            # aim at the middle of the window so rounding cannot matter
            q = int(mpmath.nint(mpmath.exp((lo + hi) / 2)))
            lq = mpmath.log(q)
            if lo < lq < hi:
                return GridSeparation(float(L), q, float(lo), float(hi))
    return None


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

RAPID = "rapid-guaranteed"
SLOW = "slow-guaranteed"
OPEN = "indeterminate"


@dataclass(frozen=True)
class ThresholdReport:
    delta: int
    lam: object
    q: int
    eta: Fraction
    log_q_glauber: float
    log_q_rapid_eta: float
    log_q_slow_eta: float | None
    verdict_glauber: str
    verdict_rapid_eta: str
    verdict_slow_eta: str
    extras: dict = field(default_factory=dict)

    def row(self) -> list:
        return [self.delta, str(self.lam), self.q, self.verdict_glauber, self.verdict_rapid_eta,
                self.verdict_slow_eta, repr(self.log_q_glauber), repr(self.log_q_rapid_eta),
                "" if self.log_q_slow_eta is None else repr(self.log_q_slow_eta)]

    HEADER = ["delta", "lambda", "q", "verdict_glauber", "verdict_rapid_eta", "verdict_slow_eta",
              "log_q_glauber", "log_q_rapid_eta", "log_q_slow_eta"]


def threshold_report(delta: int, lam, q: int, eta=Fraction(1, 5)) -> ThresholdReport:
    eta = _as_fraction(eta)
    glauber = rapid_threshold_glauber(delta, lam)
    rapid = eta_rapid_threshold(eta, delta, lam)
    slow = eta_slow_threshold(eta, delta, lam) if delta >= 3 else None
    return ThresholdReport(
        delta, lam, q, eta, _ln(glauber), rapid, slow,
        RAPID if q >= glauber else OPEN,
        RAPID if math.log(q) > rapid else OPEN,
        SLOW if slow is not None and math.log(q) < slow else OPEN)


# ---------------------------------------------------------------------------
# the double root behind beta_0
# ---------------------------------------------------------------------------


def double_root_poly(x: float, q: float, delta: int, B: float) -> float:
    """(q-1) x^Delta + (2 - B - q) x^(Delta-1) + B x - 1."""
    return (q - 1) * x**delta + (2 - B - q) * x ** (delta - 1) + B * x - 1


def double_root_poly_prime(x: float, q: float, delta: int, B: float) -> float:
    return delta * (q - 1) * x ** (delta - 1) + (delta - 1) * (2 - B - q) * x ** (delta - 2) + B


def B_of_x(x: float, q: float, delta: int) -> float:
    """The B that makes x a root of f."""
    return (1 - (q - 1) * x**delta - (2 - q) * x ** (delta - 1)) / (x - x ** (delta - 1))


@dataclass(frozen=True)
class PhasePoint:
    q: float
    delta: int
    B: float
    beta0: float
    x_star: float
    residual_f: float
    residual_fprime: float


def double_root(q: float, delta: int, grid: int = 10_000, top: float = 1 - 1e-6) -> PhasePoint:
    """Solve f(x) = f'(x) = 0 with x in (0, 1): eliminate B through f(x) = 0,
    scan g(x) = f'(x; B(x)) for a sign change, then bisect until the bracket
    stops shrinking in floating point."""
    if delta < 3 and q < 3:
        raise ParameterError("need q >= 3, or q = 2 with Delta >= 3")
    if delta < 3:
        raise ParameterError("the double-root problem needs Delta >= 3")

    def g(x):
        return double_root_poly_prime(x, q, delta, B_of_x(x, q, delta))

    xs = np.linspace(top / grid, top, grid)
    vals = [g(x) for x in xs]
    for i in range(len(xs) - 1):
        a, b = xs[i], xs[i + 1]
        ga, gb = vals[i], vals[i + 1]
        if ga == 0 or ga * gb < 0:
            if B_of_x(a, q, delta) <= 0:
                continue
            while True:
                mid = (a + b) / 2
                if mid in (a, b):
                    break
                gm = g(mid)
                if gm == 0:
                    a = b = mid
                    break
                if (gm < 0) == (ga < 0):
                    a, ga = mid, gm
                else:
                    b = mid
            x = float(a if abs(g(a)) <= abs(g(b)) else b)
            B = float(B_of_x(x, q, delta))
            if B <= 0:
                continue
            return PhasePoint(q, delta, B, math.log(B), x, double_root_poly(x, q, delta, B),
                              double_root_poly_prime(x, q, delta, B))
    raise RootNotFoundError(
        f"no sign change of f'(x; B(x)) with B > 0 on {grid} points of (0, {top}] for q={q}, Delta={delta}")


def beta0_slope(qs: Sequence[float], delta: int) -> float:
    """Least-squares slope of log B against log q."""
    x = np.log(np.asarray(qs, dtype=float))
    y = np.array([double_root(q, delta).beta0 for q in qs])
    return float(np.polyfit(x, y, 1)[0])
