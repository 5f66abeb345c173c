"""Plug-in bandwidths for the kernel distribution function.

The MSE-optimal SRS bandwidth depends on ``f(t)`` and ``f'(t)``; both are
replaced by the density and slope of a reference distribution fitted to the
sample (exponential for positive data, normal otherwise).  The JPS
bandwidth rescales it by ``(n H E(W_1^2 J_1))^(1/3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .distributions import Support
from .kernels import get_kernel
from .moments import e_w2j

__all__ = [
    "RefFamily",
    "ReferenceFit",
    "fit_reference",
    "ref_density_and_slope",
    "Bandwidth",
    "h_srs",
    "h_jps",
    "jps_bandwidth_factor",
    "select_bandwidth",
    "SLOPE_CLAMP",
]

# |f'| is floored at SLOPE_CLAMP * f / scale
SLOPE_CLAMP = 1e-3


class RefFamily(str, Enum):
    EXPONENTIAL = "exponential"
    NORMAL = "normal"


@dataclass(frozen=True)
class ReferenceFit:
    """Fitted reference: exponential with mean ``mean``, or normal with
    mean ``mean`` and variance ``var`` (divisor n)."""

    family: RefFamily
    mean: float
    var: Optional[float] = None

    @property
    def scale(self) -> float:
        return self.mean if self.family is RefFamily.EXPONENTIAL else math.sqrt(self.var)


def fit_reference(xs, support="real", *, allow_zero: bool = False) -> ReferenceFit:
    """Fit the reference distribution used to plug in ``f(t)`` and ``f'(t)``.

    ``allow_zero`` admits zero observations under the exponential reference
    (only the sample mean enters the fit); negative values are always
    rejected there.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size < 2:
        raise ValueError("reference fit needs at least two observations")
    support = Support(support.value if isinstance(support, Support) else support)
    mean = float(xs.mean())
    if support is Support.POSITIVE:
        bad = xs < 0 if allow_zero else xs <= 0
        if np.any(bad):
            raise ValueError("exponential reference requires positive observations")
        if not mean > 0:
            raise ValueError("exponential reference requires a positive mean")
        return ReferenceFit(RefFamily.EXPONENTIAL, mean)
    var = float(np.mean((xs - mean) ** 2))
    if not var > 0:
        raise ValueError("normal reference requires S^2 > 0")
    return ReferenceFit(RefFamily.NORMAL, mean, var)


def ref_density_and_slope(fit: ReferenceFit, t):
    """Density and derivative of the fitted reference at ``t``."""
    t = np.asarray(t, dtype=float)
    if fit.family is RefFamily.EXPONENTIAL:
        f = np.where(t >= 0, np.exp(-np.maximum(t, 0.0) / fit.mean) / fit.mean, 0.0)
        fp = -f / fit.mean
    else:
        s = math.sqrt(fit.var)
        z = (t - fit.mean) / s
        f = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * s)
        fp = -((t - fit.mean) / fit.var) * f
    if np.ndim(t) == 0:
        return float(f), float(fp)
    return f, fp


@dataclass(frozen=True)
class Bandwidth:
    """A selected bandwidth and whether the slope clamp or range cap was hit."""

    h: float
    clamped: bool = False
    capped: bool = False


def _h_srs_raw(n, kernel, f, fp):
    return (f * (kernel.a - kernel.int_K2) / (n * (fp * kernel.int_x2k) ** 2)) ** (1.0 / 3.0)


def h_srs(n: int, kernel, f_hat: float, fprime_hat: float, *, scale: Optional[float] = None,
          h_max: Optional[float] = None) -> Bandwidth:
    """MSE-optimal SRS bandwidth with plug-in ``f`` and ``f'``.

    ``|f'|`` is floored at ``SLOPE_CLAMP * f / scale`` when ``scale`` is
    given (without it, at ``SLOPE_CLAMP * f``), and the result is capped at
    ``h_max`` when given.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not f_hat > 0:
        raise ValueError(f"plug-in density must be positive, got {f_hat!r}")
    kernel = get_kernel(kernel)
    floor = SLOPE_CLAMP * f_hat / (scale if scale else 1.0)
    clamped = abs(fprime_hat) < floor
    fp = floor if clamped else fprime_hat
    h = float(_h_srs_raw(n, kernel, f_hat, fp))
    capped = h_max is not None and h > h_max
    return Bandwidth(float(h_max) if capped else h, clamped, capped)


def jps_bandwidth_factor(n: int, H: int) -> float:
    """``(n H E(W_1^2 J_1))^(1/3)``, from the exact weight moments."""
    return float(n * H * e_w2j(n, H)) ** (1.0 / 3.0)


def h_jps(n: int, H: int, kernel, f_hat: float, fprime_hat: float, *, scale: Optional[float] = None,
          h_max: Optional[float] = None) -> Bandwidth:
    """JPS bandwidth: the SRS bandwidth times :func:`jps_bandwidth_factor`.

    The range cap, if any, applies after rescaling.
    """
    base = h_srs(n, kernel, f_hat, fprime_hat, scale=scale)
    h = base.h * jps_bandwidth_factor(n, H)
    capped = h_max is not None and h > h_max
    return Bandwidth(float(h_max) if capped else h, base.clamped, capped)


def select_bandwidth(xs, kernel, t: float, *, support="real", H: Optional[int] = None,
                     allow_zero: bool = False) -> Bandwidth:
    """Plug-in bandwidth for the sample ``xs`` at evaluation point ``t``.

    With ``H`` the JPS bandwidth is returned, otherwise the SRS one.  The
    cap is the sample range.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    fit = fit_reference(xs, support, allow_zero=allow_zero)
    f, fp = ref_density_and_slope(fit, t)
    h_max = float(xs.max() - xs.min()) or None
    if H is None:
        return h_srs(xs.size, kernel, f, fp, scale=fit.scale, h_max=h_max)
    return h_jps(xs.size, H, kernel, f, fp, scale=fit.scale, h_max=h_max)
