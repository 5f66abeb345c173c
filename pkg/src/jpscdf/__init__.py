"""Estimation of a distribution function under judgment post-stratification.

The package provides EDF and kernel (KDF) estimators under simple random
sampling and JPS, exact moments of the post-strata weights, plug-in
bandwidths, and Monte Carlo relative-efficiency harnesses for synthetic
parents and the bodyfat finite population.
"""
from importlib.metadata import PackageNotFoundError, version as _pkg_version

try:
    __version__ = _pkg_version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bandwidth import Bandwidth, h_jps, h_srs, select_bandwidth
from .distributions import ParentDistribution, get_distribution
from .estimators import (
    CdfEstimate,
    EstimatorTag,
    JpsSample,
    edf_jps,
    edf_srs,
    estimate_cdf,
    kdf_jps,
    kdf_srs,
    kpdf_jps,
    post_strata,
)
from .kernels import KernelSpec, get_kernel
from .moments import e_w2j, var_w, weight_moments
from .sim import ReCurve, draw_jps, re_curve

__all__ = [
    "__version__",
    "Bandwidth",
    "CdfEstimate",
    "EstimatorTag",
    "JpsSample",
    "KernelSpec",
    "ParentDistribution",
    "ReCurve",
    "draw_jps",
    "e_w2j",
    "edf_jps",
    "edf_srs",
    "estimate_cdf",
    "get_distribution",
    "get_kernel",
    "h_jps",
    "h_srs",
    "kdf_jps",
    "kdf_srs",
    "kpdf_jps",
    "post_strata",
    "re_curve",
    "select_bandwidth",
    "var_w",
    "weight_moments",
]
