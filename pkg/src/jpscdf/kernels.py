"""Symmetric, bounded-support kernels and their integrated CDFs.

Each kernel ``k`` is a symmetric density on ``[-a, a]`` and ``K`` is its
integral from ``-a``.  The two integrals that enter the plug-in bandwidth,
``int x^2 k(x) dx`` and ``int K^2(x) dx``, are stored as constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

__all__ = [
    "KernelKind",
    "KernelSpec",
    "get_kernel",
    "kernel_pdf",
    "kernel_cdf",
    "kernel_constants",
    "KERNEL_NAMES",
]


class KernelKind(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    TRIANGULAR = "triangular"
    COSINE = "cosine"
    GAUSSIAN = "gaussian"  # truncated to [-4, 4]


KERNEL_NAMES = tuple(k.value for k in KernelKind)

_SQRT2 = math.sqrt(2.0)
_GAUSS_A = 4.0
# Phi(4) - Phi(-4)
_GAUSS_Z = math.erf(_GAUSS_A / _SQRT2)
_GAUSS_PHI4 = math.exp(-0.5 * _GAUSS_A**2) / math.sqrt(2.0 * math.pi)
_GAUSS_PHI_M4 = 0.5 * math.erfc(_GAUSS_A / _SQRT2)
# int K^2 over [-4, 4]; 40-digit quadrature, rounded to double
_GAUSS_INT_K2 = 3.436006621427905724943


@dataclass(frozen=True)
class KernelSpec:
    """A kernel from the admissible family.

    Attributes
    ----------
    kind : KernelKind
    a : float
        Support half-width.
    int_x2k : float
        Second moment of the kernel density.
    int_K2 : float
        Integral of the squared kernel CDF over ``[-a, a]``.
    """

    kind: KernelKind
    a: float
    int_x2k: float
    int_K2: float

    @property
    def name(self) -> str:
        return self.kind.value

    def pdf(self, x):
        return kernel_pdf(self.kind, x)

    def cdf(self, x):
        return kernel_cdf(self.kind, x)


_SPECS = {
    KernelKind.EPANECHNIKOV: KernelSpec(KernelKind.EPANECHNIKOV, 1.0, 0.2, 26.0 / 35.0),
    KernelKind.TRIANGULAR: KernelSpec(KernelKind.TRIANGULAR, 1.0, 1.0 / 6.0, 23.0 / 30.0),
    KernelKind.COSINE: KernelSpec(KernelKind.COSINE, 1.0, 1.0 - 8.0 / math.pi**2, 0.75),
    KernelKind.GAUSSIAN: KernelSpec(
        KernelKind.GAUSSIAN, _GAUSS_A, 1.0 - 2.0 * _GAUSS_A * _GAUSS_PHI4 / _GAUSS_Z, _GAUSS_INT_K2
    ),
}


def _kind(kind) -> KernelKind:
    if isinstance(kind, KernelSpec):
        return kind.kind
    if isinstance(kind, KernelKind):
        return kind
    try:
        return KernelKind(str(kind).lower())
    except ValueError:
        raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNEL_NAMES}") from None


def get_kernel(kind) -> KernelSpec:
    """Return the :class:`KernelSpec` for a kind, enum member or lowercase name."""
    return _SPECS[_kind(kind)]


def kernel_constants(kind) -> tuple[float, float, float]:
    """Return ``(a, int_x2k, int_K2)`` for a kernel."""
    spec = get_kernel(kind)
    return spec.a, spec.int_x2k, spec.int_K2


def _out(x, values):
    return values if np.ndim(x) else float(values)


def kernel_pdf(kind, x):
    """Kernel density ``k(x)``; zero outside the support."""
    kind = _kind(kind)
    x = np.asarray(x, dtype=float)
    a = _SPECS[kind].a
    inside = np.abs(x) <= a
    xc = np.clip(x, -a, a)
    if kind is KernelKind.EPANECHNIKOV:
        v = 0.75 * (1.0 - xc * xc)
    elif kind is KernelKind.TRIANGULAR:
        v = 1.0 - np.abs(xc)
    elif kind is KernelKind.COSINE:
        v = (math.pi / 4.0) * np.cos(0.5 * math.pi * xc)
    else:
        v = np.exp(-0.5 * xc * xc) / (math.sqrt(2.0 * math.pi) * _GAUSS_Z)
    return _out(x, np.where(inside, v, 0.0))


def kernel_cdf(kind, x):
    """Integrated kernel ``K(x)``: exactly 0 below ``-a`` and exactly 1 above ``a``."""
    kind = _kind(kind)
    x = np.asarray(x, dtype=float)
    a = _SPECS[kind].a
    xc = np.clip(x, -a, a)
    if kind is KernelKind.EPANECHNIKOV:
        v = 0.5 + 0.75 * (xc - xc**3 / 3.0)
    elif kind is KernelKind.TRIANGULAR:
        v = np.where(xc < 0.0, 0.5 * (1.0 + xc) ** 2, 1.0 - 0.5 * (1.0 - xc) ** 2)
    elif kind is KernelKind.COSINE:
        v = 0.5 * (1.0 + np.sin(0.5 * math.pi * xc))
    else:
        v = (ndtr(xc) - _GAUSS_PHI_M4) / _GAUSS_Z
    v = np.clip(v, 0.0, 1.0)
    v = np.where(x <= -a, 0.0, np.where(x >= a, 1.0, v))
    return _out(x, v)
