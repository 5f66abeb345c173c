"""EDF and kernel CDF/PDF estimators under SRS and JPS designs.

A JPS sample is a set of measured values ``x_i`` with judgment ranks
``r_i`` in ``1..H``.  The JPS estimators average the within-stratum
estimates with weights ``W_r = 1{N_r > 0} / d_n``; empty strata carry zero
weight and contribute nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .kernels import KernelSpec, get_kernel

__all__ = [
    "JpsSample",
    "PostStrata",
    "EstimatorTag",
    "CdfEstimate",
    "post_strata",
    "edf_srs",
    "kdf_srs",
    "edf_jps",
    "kdf_jps",
    "kpdf_jps",
    "estimate_cdf",
]


@dataclass(frozen=True)
class JpsSample:
    """Measured values with their judgment ranks (1-based) and the set size."""

    x: np.ndarray
    ranks: np.ndarray
    H: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        r = np.asarray(self.ranks).ravel()
        if x.size == 0:
            raise ValueError("a JPS sample needs at least one observation")
        if x.size != r.size:
            raise ValueError("x and ranks must have the same length")
        if int(self.H) < 2:
            raise ValueError("set size H must be >= 2")
        if not np.all(np.isfinite(x)):
            raise ValueError("measured values must be finite")
        if np.any(r != np.round(r)) or r.min() < 1 or r.max() > self.H:
            raise ValueError(f"ranks must be integers in 1..{self.H}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ranks", r.astype(np.int64))
        object.__setattr__(self, "H", int(self.H))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, int]], H: int) -> "JpsSample":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=float), np.array([p[1] for p in pairs]), H)

    @property
    def n(self) -> int:
        return self.x.size

    def strata(self) -> list[np.ndarray]:
        """Sorted measured values of each stratum, ranks 1..H in order."""
        return [np.sort(self.x[self.ranks == r]) for r in range(1, self.H + 1)]


@dataclass(frozen=True)
class PostStrata:
    counts: np.ndarray
    weights: np.ndarray
    inv_counts: np.ndarray
    d_n: int


def post_strata(sample: JpsSample) -> PostStrata:
    counts = np.bincount(sample.ranks - 1, minlength=sample.H)
    occupied = counts > 0
    d_n = int(occupied.sum())
    weights = occupied / d_n
    inv_counts = np.divide(1.0, counts, out=np.zeros(sample.H), where=occupied)
    return PostStrata(counts, weights, inv_counts, d_n)


def _scalar_or_array(t, values):
    return values if np.ndim(t) else float(values[0])


def _check_h(h: float) -> None:
    if not h > 0.0:
        raise ValueError(f"bandwidth must be positive, got {h!r}")


def _edf_sorted(xs_sorted: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.searchsorted(xs_sorted, t, side="right") / xs_sorted.size


def _kdf_sorted(xs_sorted: np.ndarray, kernel: KernelSpec, h: float, t: np.ndarray) -> np.ndarray:
    # Points at or left of t - a*h contribute exactly 1, at or right of t + a*h exactly 0;
    # only the window in between needs kernel evaluations.
    ah = kernel.a * h
    lo = np.searchsorted(xs_sorted, t - ah, side="right")
    hi = np.searchsorted(xs_sorted, t + ah, side="left")
    out = lo.astype(float)
    for i in np.flatnonzero(hi > lo):
        out[i] += kernel.cdf((t[i] - xs_sorted[lo[i]:hi[i]]) / h).sum()
    return out / xs_sorted.size


def _kpdf_sorted(xs_sorted: np.ndarray, kernel: KernelSpec, h: float, t: np.ndarray) -> np.ndarray:
    ah = kernel.a * h
    lo = np.searchsorted(xs_sorted, t - ah, side="right")
    hi = np.searchsorted(xs_sorted, t + ah, side="left")
    out = np.zeros(t.shape)
    for i in np.flatnonzero(hi > lo):
        out[i] = kernel.pdf((t[i] - xs_sorted[lo[i]:hi[i]]) / h).sum()
    return out / (xs_sorted.size * h)


def edf_srs(xs, t):
    """Empirical distribution function ``(1/n) sum 1{x_i <= t}``."""
    xs = np.sort(np.asarray(xs, dtype=float).ravel())
    if xs.size == 0:
        raise ValueError("need at least one observation")
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    return _scalar_or_array(t, _edf_sorted(xs, tt))


def kdf_srs(xs, kernel, h: float, t):
    """Kernel distribution function ``(1/n) sum K((t - x_i)/h)``."""
    _check_h(h)
    kernel = get_kernel(kernel)
    xs = np.sort(np.asarray(xs, dtype=float).ravel())
    if xs.size == 0:
        raise ValueError("need at least one observation")
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    return _scalar_or_array(t, _kdf_sorted(xs, kernel, h, tt))


def _jps_combine(sample: JpsSample, t, per_stratum):
    ps = post_strata(sample)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    total = np.zeros(tt.shape)
    for xs in sample.strata():
        if xs.size:
            total += per_stratum(xs, tt)
    # dividing once by d_n keeps the tails exactly 0 and 1
    return _scalar_or_array(t, total / ps.d_n)


def edf_jps(sample: JpsSample, t):
    """JPS empirical distribution function ``sum_r W_r F*_{[r]}(t)``."""
    return _jps_combine(sample, t, _edf_sorted)


def kdf_jps(sample: JpsSample, kernel, h: float, t):
    """JPS kernel distribution function ``sum_r W_r F^k_{[r]}(t)``."""
    _check_h(h)
    kernel = get_kernel(kernel)
    return _jps_combine(sample, t, lambda xs, tt: _kdf_sorted(xs, kernel, h, tt))


def kpdf_jps(sample: JpsSample, kernel, h: float, t):
    """JPS kernel density estimate, the t-derivative of :func:`kdf_jps`.

    Includes the ``1/h`` factor so that the estimate integrates to one.
    """
    _check_h(h)
    kernel = get_kernel(kernel)
    return _jps_combine(sample, t, lambda xs, tt: _kpdf_sorted(xs, kernel, h, tt))


class EstimatorTag(str, Enum):
    EDF_SRS = "EdfSrs"
    KDF_SRS = "KdfSrs"
    EDF_JPS = "EdfJps"
    KDF_JPS = "KdfJps"


@dataclass
class CdfEstimate:
    """A CDF estimate on a grid of evaluation points.

    ``bandwidth`` is a scalar for a fixed or global bandwidth, an array of
    per-point bandwidths for pointwise selection, and ``None`` for EDFs.
    """

    eval_points: np.ndarray
    values: np.ndarray
    estimator_tag: EstimatorTag
    bandwidth: Optional[np.ndarray] = None
    n: int = 0
    H: Optional[int] = None
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def bandwidth_at(self, i: int) -> Optional[float]:
        if self.bandwidth is None:
            return None
        b = np.broadcast_to(np.asarray(self.bandwidth, dtype=float), self.eval_points.shape)
        return float(b[i])


def estimate_cdf(
    t,
    *,
    xs=None,
    sample: Optional[JpsSample] = None,
    kernel=None,
    h=None,
) -> CdfEstimate:
    """Evaluate one of the four CDF estimators on the points ``t``.

    Pass ``xs`` for an SRS sample or ``sample`` for a JPS sample.  Without a
    kernel the EDF is used.  ``h`` may be a scalar or one bandwidth per point.
    """
    if (xs is None) == (sample is None):
        raise ValueError("pass exactly one of xs (SRS) or sample (JPS)")
    t = np.asarray(t, dtype=float).ravel()
    jps = sample is not None
    if kernel is None:
        tag = EstimatorTag.EDF_JPS if jps else EstimatorTag.EDF_SRS
        values = edf_jps(sample, t) if jps else edf_srs(xs, t)
        hh = None
    else:
        if h is None:
            raise ValueError("a kernel estimator needs a bandwidth")
        tag = EstimatorTag.KDF_JPS if jps else EstimatorTag.KDF_SRS
        hh = np.broadcast_to(np.asarray(h, dtype=float), t.shape)
        fn = (lambda hi, ti: kdf_jps(sample, kernel, hi, ti)) if jps else (lambda hi, ti: kdf_srs(xs, kernel, hi, ti))
        if t.size == 0:
            values = np.zeros(0)
        elif np.all(hh == hh[0]):
            values = fn(float(hh[0]), t)
        else:
            values = np.array([fn(float(hi), ti) for hi, ti in zip(hh, t)])
        hh = np.asarray(h, dtype=float)
    n = sample.n if jps else int(np.size(xs))
    return CdfEstimate(t, np.asarray(values, dtype=float), tag, hh, n, sample.H if jps else None)
