"""Parent distributions for the simulation study and order-statistic CDFs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

__all__ = [
    "DistKind",
    "Support",
    "ParentDistribution",
    "get_distribution",
    "dist_pdf",
    "dist_cdf",
    "dist_quantile",
    "dist_sample",
    "uniform_open",
    "transform_uniforms",
    "order_stat_cdf",
    "order_stat_pdf",
    "DIST_NAMES",
]


class DistKind(str, Enum):
    NORMAL = "normal"
    T5 = "t5"
    LAPLACE = "laplace"
    EXP1 = "exp1"
    GAMMA05 = "gamma05"
    GAMMA2 = "gamma2"


class Support(str, Enum):
    REAL_LINE = "real"
    POSITIVE = "positive"


DIST_NAMES = tuple(k.value for k in DistKind)

_T_DF = 5.0
_T_NORM = math.gamma(3.0) / (math.sqrt(5.0 * math.pi) * math.gamma(2.5))


@dataclass(frozen=True)
class ParentDistribution:
    """One of the six analytic parents, with its mean, variance and support."""

    kind: DistKind
    mean: float
    variance: float
    support: Support

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, x):
        return dist_pdf(self, x)

    def cdf(self, x):
        return dist_cdf(self, x)

    def quantile(self, p):
        return dist_quantile(self, p)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return dist_sample(self, n, rng)


_DISTS = {
    DistKind.NORMAL: ParentDistribution(DistKind.NORMAL, 0.0, 1.0, Support.REAL_LINE),
    DistKind.T5: ParentDistribution(DistKind.T5, 0.0, 5.0 / 3.0, Support.REAL_LINE),
    DistKind.LAPLACE: ParentDistribution(DistKind.LAPLACE, 0.0, 2.0, Support.REAL_LINE),
    DistKind.EXP1: ParentDistribution(DistKind.EXP1, 1.0, 1.0, Support.POSITIVE),
    DistKind.GAMMA05: ParentDistribution(DistKind.GAMMA05, 0.5, 0.5, Support.POSITIVE),
    DistKind.GAMMA2: ParentDistribution(DistKind.GAMMA2, 2.0, 2.0, Support.POSITIVE),
}

_GAMMA_SHAPE = {DistKind.EXP1: 1.0, DistKind.GAMMA05: 0.5, DistKind.GAMMA2: 2.0}


def get_distribution(kind) -> ParentDistribution:
    if isinstance(kind, ParentDistribution):
        return kind
    if isinstance(kind, DistKind):
        return _DISTS[kind]
    try:
        return _DISTS[DistKind(str(kind).lower())]
    except ValueError:
        raise ValueError(f"unknown distribution {kind!r}; expected one of {DIST_NAMES}") from None


def _out(x, values):
    return values if np.ndim(x) else float(values)


def dist_pdf(dist, x):
    dist = get_distribution(dist)
    x = np.asarray(x, dtype=float)
    k = dist.kind
    if k is DistKind.NORMAL:
        v = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    elif k is DistKind.T5:
        v = _T_NORM * (1.0 + x * x / _T_DF) ** (-0.5 * (_T_DF + 1.0))
    elif k is DistKind.LAPLACE:
        v = 0.5 * np.exp(-np.abs(x))
    else:
        shape = _GAMMA_SHAPE[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(
                x > 0.0,
                np.exp((shape - 1.0) * np.log(np.where(x > 0, x, 1.0)) - x - math.lgamma(shape)),
                0.0,
            )
    return _out(x, v)


def dist_cdf(dist, x):
    dist = get_distribution(dist)
    x = np.asarray(x, dtype=float)
    k = dist.kind
    if k is DistKind.NORMAL:
        v = special.ndtr(x)
    elif k is DistKind.T5:
        v = special.stdtr(_T_DF, x)
    elif k is DistKind.LAPLACE:
        v = np.where(x < 0.0, 0.5 * np.exp(np.minimum(x, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0)))
    elif k is DistKind.EXP1:
        v = np.where(x > 0.0, -np.expm1(-np.maximum(x, 0.0)), 0.0)
    else:
        v = special.gammainc(_GAMMA_SHAPE[k], np.maximum(x, 0.0))
    return _out(x, v)


def dist_quantile(dist, p):
    """Inverse CDF.  Raises ``ValueError`` for any ``p`` outside ``(0, 1)``."""
    dist = get_distribution(dist)
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("quantile requires p in the open interval (0, 1)")
    return _out(p, _quantile_unchecked(dist, p))


def _quantile_unchecked(dist: ParentDistribution, u: np.ndarray) -> np.ndarray:
    k = dist.kind
    if k is DistKind.NORMAL:
        return special.ndtri(u)
    if k is DistKind.T5:
        return special.stdtrit(_T_DF, u)
    if k is DistKind.LAPLACE:
        return np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
    if k is DistKind.EXP1:
        return -np.log1p(-u)
    return special.gammaincinv(_GAMMA_SHAPE[k], u)


def uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    u = rng.random(size)
    u[u == 0.0] = 2.0**-54
    return u


def dist_sample(dist, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. draws by inverse-CDF transform of one uniform each."""
    dist = get_distribution(dist)
    if n < 1:
        raise ValueError("n must be >= 1")
    return _quantile_unchecked(dist, uniform_open(rng, n))


def transform_uniforms(dist, u: np.ndarray) -> np.ndarray:
    """Map uniforms in (0, 1) to draws from ``dist`` (no range check)."""
    return _quantile_unchecked(get_distribution(dist), u)


def _check_rank(r: int, H: int) -> None:
    if H < 1 or not 1 <= r <= H:
        raise ValueError(f"rank r={r} must lie in 1..H (H={H})")


def order_stat_cdf(dist, t, r: int, H: int):
    """CDF of the r-th order statistic out of ``H``:
    ``sum_{j=r}^{H} C(H, j) F^j (1 - F)^(H - j)`` with ``F = F(t)``.
    """
    _check_rank(r, H)
    F = np.asarray(dist_cdf(dist, t), dtype=float)
    G = 1.0 - F
    total = np.zeros_like(F)
    for j in range(r, H + 1):
        total = total + math.comb(H, j) * F**j * G ** (H - j)
    return _out(t, np.clip(total, 0.0, 1.0))


def order_stat_pdf(dist, t, r: int, H: int):
    """Density of the r-th order statistic out of ``H``."""
    _check_rank(r, H)
    F = np.asarray(dist_cdf(dist, t), dtype=float)
    c = H * math.comb(H - 1, r - 1)
    v = c * F ** (r - 1) * (1.0 - F) ** (H - r) * np.asarray(dist_pdf(dist, t))
    return _out(t, v)
