"""Exact moments of the random post-strata weights and JPS variance formulas.

``var_w`` and ``e_w2j`` are evaluated in exact rational arithmetic; the
alternating sum in ``e_w2j`` loses all precision in doubles once ``n`` is
more than a few dozen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np
from scipy import integrate

from .distributions import dist_cdf, dist_pdf, get_distribution, order_stat_cdf, order_stat_pdf
from .kernels import get_kernel

__all__ = [
    "WeightMoments",
    "weight_moments",
    "var_w",
    "e_w2j",
    "var_w_oracle",
    "e_w2j_oracle",
    "ORACLE_MAX_N",
    "ORACLE_MAX_H",
    "QuadratureError",
    "StratumMoments",
    "stratum_moments",
    "jps_asym_variance",
    "jps_variance_by_strata",
    "jps_variance_pooled",
    "finite_n_variance",
    "srs_variance",
    "efficiency_delta",
]

ORACLE_MAX_N = 10
ORACLE_MAX_H = 4


def _check_nH(n: int, H: int) -> None:
    if H < 2:
        raise ValueError(f"set size H must be >= 2, got {H}")
    if n < 1:
        raise ValueError(f"sample size n must be >= 1, got {n}")


@lru_cache(maxsize=None)
def var_w(n: int, H: int) -> Fraction:
    """Exact ``V(W_r) = H^-2 sum_{l=1}^{H-1} (l/H)^(n-1)``."""
    _check_nH(n, H)
    total = sum(Fraction(l**(n - 1), H**(n - 1)) for l in range(1, H))
    return total / H**2


@lru_cache(maxsize=None)
def e_w2j(n: int, H: int) -> Fraction:
    """Exact ``E(W_r^2 J_r)`` from the closed-form triple alternating sum.

    The n1-sum depends on (d, j) only through ``m = d - j`` and its upper
    limit ``n - d + 1``, so one pass of prefix sums per ``m`` serves every d.
    Terms are scaled by ``L = lcm(1..n)`` to stay in integers.
    """
    _check_nH(n, H)
    L = math.lcm(*range(1, n + 1))
    wanted = {}  # m -> set of upper limits needed
    for d in range(2, min(H, n) + 1):
        for j in range(1, d):
            wanted.setdefault(d - j, set()).add(n - d + 1)
    prefix = {}  # (m, U) -> sum_{n1=1}^{U} C(n, n1) m^(n-n1) L / n1
    for m, limits in wanted.items():
        top = max(limits)
        acc = 0
        binom = 1
        for n1 in range(1, top + 1):
            binom = binom * (n - n1 + 1) // n1
            acc += binom * m ** (n - n1) * (L // n1)
            if n1 in limits:
                prefix[(m, n1)] = acc
    bracket = Fraction(1, n)
    for d in range(2, min(H, n) + 1):
        q = 0
        for j in range(1, d):
            sign = 1 if j % 2 == 1 else -1
            q += sign * math.comb(H - 1, d - 1) * math.comb(d - 1, j - 1) * prefix[(d - j, n - d + 1)]
        bracket += Fraction(q, L * d * d)
    return bracket / H**n


def _compositions(n: int, H: int) -> Iterator[tuple[int, ...]]:
    if H == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, H - 1):
            yield (first,) + rest


def _enumerate_weight_moments(n: int, H: int) -> tuple[Fraction, Fraction]:
    """``(E W_1^2, E W_1^2 J_1)`` summed over all count vectors with multinomial weights."""
    ew2 = Fraction(0)
    ew2j = Fraction(0)
    nfact = math.factorial(n)
    for counts in _compositions(n, H):
        mult = nfact
        for c in counts:
            mult //= math.factorial(c)
        if counts[0] == 0:
            continue
        d = sum(1 for c in counts if c > 0)
        w2 = Fraction(mult, d * d)
        ew2 += w2
        ew2j += w2 / counts[0]
    Hn = H**n
    return ew2 / Hn, ew2j / Hn


def _check_oracle_bounds(n: int, H: int) -> None:
    _check_nH(n, H)
    if n > ORACLE_MAX_N or H > ORACLE_MAX_H:
        raise ValueError(
            f"enumeration oracle limited to n <= {ORACLE_MAX_N}, H <= {ORACLE_MAX_H}; got n={n}, H={H}"
        )


def e_w2j_oracle(n: int, H: int) -> Fraction:
    """``E(W_1^2 J_1)`` by full enumeration of post-strata count vectors."""
    _check_oracle_bounds(n, H)
    return _enumerate_weight_moments(n, H)[1]


def var_w_oracle(n: int, H: int) -> Fraction:
    """``V(W_1)`` by full enumeration, using ``E W_1 = 1/H``."""
    _check_oracle_bounds(n, H)
    return _enumerate_weight_moments(n, H)[0] - Fraction(1, H * H)


@dataclass(frozen=True)
class WeightMoments:
    n: int
    H: int
    var_w: Fraction
    e_w2j: Fraction

    @property
    def var_w_float(self) -> float:
        return float(self.var_w)

    @property
    def e_w2j_float(self) -> float:
        return float(self.e_w2j)

    @property
    def nH_e_w2j(self) -> float:
        return float(self.n * self.H * self.e_w2j)


def weight_moments(n: int, H: int) -> WeightMoments:
    return WeightMoments(n, H, var_w(n, H), e_w2j(n, H))


# --- variance of the JPS estimators -------------------------------------------


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


_QUAD_EPSREL = 1e-9


def _quad(fun, lo: float, hi: float) -> float:
    value, abserr, info = integrate.quad(fun, lo, hi, epsabs=1e-14, epsrel=_QUAD_EPSREL, limit=200, full_output=1)[:3]
    if abserr > max(1e-12, 10 * _QUAD_EPSREL * abs(value)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge (estimate {value}, error {abserr})")
    return value


@dataclass(frozen=True)
class StratumMoments:
    """First two moments of ``K_n(t - X)`` per stratum and for the parent.

    ``mean[r]`` and ``var[r]`` refer to rank ``r + 1``; ``pooled_mean`` and
    ``pooled_var`` are computed from the parent distribution directly.
    """

    mean: np.ndarray
    var: np.ndarray
    pooled_mean: float
    pooled_var: float

    @property
    def H(self) -> int:
        return self.mean.size

    @property
    def spread(self) -> float:
        """``sum_r (E K_n(t - X_[r]) - E K_n(t - X))^2``."""
        return float(np.sum((self.mean - self.pooled_mean) ** 2))


def _kernel_moments(cdf, pdf, t: float, kernel, h: float) -> tuple[float, float]:
    # K((t - x)/h) is 1 for x <= t - a h and 0 for x >= t + a h.
    lo, hi = t - kernel.a * h, t + kernel.a * h
    below = float(cdf(lo))
    m1 = below + _quad(lambda x: kernel.cdf((t - x) / h) * pdf(x), lo, hi)
    m2 = below + _quad(lambda x: kernel.cdf((t - x) / h) ** 2 * pdf(x), lo, hi)
    return m1, m2


def stratum_moments(dist, t: float, H: int, kernel=None, h: Optional[float] = None, ranking: str = "perfect") -> StratumMoments:
    """Moments of ``K_n(t - X_[r])`` for perfect or random ranking.

    Without a kernel ``K_n`` is the indicator ``1{X <= t}`` and all moments
    are closed form; with one, the integrals over ``[t - a h, t + a h]`` are
    done by adaptive Gauss-Kronrod quadrature.
    """
    dist = get_distribution(dist)
    if ranking not in ("perfect", "random"):
        raise ValueError("ranking must be 'perfect' or 'random'")
    if kernel is None:
        F = float(dist_cdf(dist, t))
        pooled = (F, F * (1.0 - F))
        if ranking == "perfect":
            means = np.array([order_stat_cdf(dist, t, r, H) for r in range(1, H + 1)])
        else:
            means = np.full(H, F)
        return StratumMoments(means, means * (1.0 - means), *pooled)
    kernel = get_kernel(kernel)
    if h is None or not h > 0:
        raise ValueError("kernel moments need a positive bandwidth")
    m1, m2 = _kernel_moments(lambda x: dist_cdf(dist, x), lambda x: dist_pdf(dist, x), t, kernel, h)
    if ranking == "random":
        return StratumMoments(np.full(H, m1), np.full(H, m2 - m1 * m1), m1, m2 - m1 * m1)
    means = np.empty(H)
    sq = np.empty(H)
    for r in range(1, H + 1):
        means[r - 1], sq[r - 1] = _kernel_moments(
            lambda x, r=r: order_stat_cdf(dist, x, r, H), lambda x, r=r: order_stat_pdf(dist, x, r, H), t, kernel, h
        )
    return StratumMoments(means, sq - means * means, m1, m2 - m1 * m1)


def jps_variance_by_strata(mom: StratumMoments, n: int) -> float:
    """Variance from stratum variances plus the spread of stratum means."""
    H = mom.H
    e = float(e_w2j(n, H))
    v = float(var_w(n, H))
    return e * float(np.sum(mom.var)) + H / (H - 1) * v * mom.spread


def jps_variance_pooled(mom: StratumMoments, n: int) -> float:
    """The same variance written through the pooled variance of ``K_n(t - X)``."""
    H = mom.H
    e = float(e_w2j(n, H))
    v = float(var_w(n, H))
    return H * e * mom.pooled_var - (e - H / (H - 1) * v) * mom.spread


def finite_n_variance(dist, t: float, n: int, H: int, kernel=None, h: Optional[float] = None, ranking: str = "perfect") -> float:
    """Exact finite-sample variance of the JPS EDF or KDF at ``t``."""
    _check_nH(n, H)
    return jps_variance_pooled(stratum_moments(dist, t, H, kernel, h, ranking), n)


def srs_variance(dist, t: float, n: int, kernel=None, h: Optional[float] = None) -> float:
    mom = stratum_moments(dist, t, 2, kernel, h, ranking="random")
    return mom.pooled_var / n


def _check_interior(dist, t: float) -> None:
    F = float(dist_cdf(dist, t))
    if not 0.0 < F < 1.0:
        raise ValueError(f"t={t} is degenerate: F(t)={F}")


def jps_asym_variance(dist, t: float, H: int) -> float:
    """Limit of ``n V(F*_{n;jps}(t))`` under perfect ranking:
    ``(1/H) sum_r F_[r](t) (1 - F_[r](t))``.
    """
    _check_interior(dist, t)
    Fr = np.array([order_stat_cdf(dist, t, r, H) for r in range(1, H + 1)])
    return float(np.mean(Fr * (1.0 - Fr)))


def efficiency_delta(dist, t: float, H: int, kernel=None, h: Optional[float] = None, ranking: str = "perfect") -> float:
    """Asymptotic variance-reduction factor: JPS variance = SRS variance * (1 - delta)."""
    _check_interior(dist, t)
    mom = stratum_moments(dist, t, H, kernel, h, ranking)
    if not mom.pooled_var > 0.0:
        raise ValueError("V(K_n(t - X)) is zero; delta undefined")
    return mom.spread / (H * mom.pooled_var)
