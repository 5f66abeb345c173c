"""JPS/SRS sample generation and the Monte Carlo relative-efficiency harness.

Every replication ``r`` draws from its own stream, seeded by
``SeedSequence(master_seed, spawn_key=(r,))``.  Replications are processed
in fixed-size chunks whose boundaries do not depend on the number of
workers, and chunk results are reduced in chunk order, so a run is
bit-for-bit reproducible for any worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .bandwidth import SLOPE_CLAMP
from .distributions import ParentDistribution, Support, get_distribution, transform_uniforms, uniform_open
from .estimators import JpsSample
from .kernels import KernelSpec, get_kernel
from .moments import e_w2j

__all__ = [
    "RankingModel",
    "replication_rng",
    "rank_within_sets",
    "draw_jps",
    "SyntheticDesign",
    "simulate_estimates",
    "ReCurve",
    "re_curve",
    "re_from_design",
    "SimulatedEstimates",
    "compare_arms",
    "mc_standard_error",
    "DEFAULT_P_GRID",
    "CHUNK_SIZE",
    "default_workers",
]

DEFAULT_P_GRID = tuple(round(0.01 * i, 2) for i in range(1, 100))
CHUNK_SIZE = 512
# Upper bound on elements of one (batch, points, n) kernel tensor.
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class RankingModel:
    """Linear ranking-error model ``Y = rho (X - mu)/sigma + sqrt(1 - rho^2) Z``."""

    rho: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def perfect(self) -> bool:
        return self.rho == 1.0


def replication_rng(master_seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(rep,))))


def default_workers() -> int:
    env = os.environ.get("JPS_CDF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def rank_within_sets(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rank of column 0 within each row of ``y`` (1 = smallest).

    Ties with the measured unit are broken uniformly at random; the stream
    is only consumed when a tie occurs.
    """
    own = y[:, :1]
    less = np.count_nonzero(y[:, 1:] < own, axis=1)
    ties = np.count_nonzero(y[:, 1:] == own, axis=1)
    ranks = 1 + less
    tied = np.flatnonzero(ties)
    if tied.size:
        ranks[tied] += rng.integers(0, ties[tied] + 1)
    return ranks


def _draw_jps_arrays(dist: ParentDistribution, n: int, H: int, rho: float, rng: np.random.Generator):
    # Column 0 is the measured unit, columns 1..H-1 its comparison set.
    x = transform_uniforms(dist, uniform_open(rng, (n, H)))
    if rho == 1.0:
        y = x
    else:
        z = rng.standard_normal((n, H))
        y = rho * (x - dist.mean) / dist.sd + math.sqrt(1.0 - rho * rho) * z
    return x[:, 0].copy(), rank_within_sets(y, rng)


def draw_jps(dist, n: int, H: int, model: Union[RankingModel, float], rng: np.random.Generator) -> JpsSample:
    """Draw a JPS sample of size ``n`` with set size ``H``."""
    if n < 1 or H < 2:
        raise ValueError("need n >= 1 and H >= 2")
    rho = model.rho if isinstance(model, RankingModel) else RankingModel(float(model)).rho
    x, r = _draw_jps_arrays(get_distribution(dist), n, H, rho, rng)
    return JpsSample(x, r, H)


@dataclass(frozen=True)
class SyntheticDesign:
    """Paired SRS/JPS draws from an analytic parent.

    With ``coupled`` the SRS arm reuses the measured values of the JPS
    sample; by default the two arms are drawn independently.
    """

    dist: ParentDistribution
    n: int
    H: int
    rho: float = 1.0
    coupled: bool = False

    def __post_init__(self):
        if self.n < 2 or self.H < 2:
            raise ValueError("need n >= 2 and H >= 2")
        RankingModel(self.rho)

    @property
    def support(self) -> Support:
        return self.dist.support

    @property
    def allow_zero(self) -> bool:
        return False

    def draw(self, rng: np.random.Generator):
        x, r = _draw_jps_arrays(self.dist, self.n, self.H, self.rho, rng)
        srs = x if self.coupled else transform_uniforms(self.dist, uniform_open(rng, self.n))
        return x, r, srs

    def eval_points(self, p_grid) -> np.ndarray:
        return np.asarray(self.dist.quantile(np.asarray(p_grid, dtype=float)), dtype=float)

    def truth(self, p_grid) -> np.ndarray:
        return np.asarray(p_grid, dtype=float)

    def describe(self) -> dict:
        return {"dist": self.dist.name, "n": self.n, "H": self.H, "rho": self.rho, "coupled": self.coupled}


# --- batched estimator evaluation ------------------------------------------------


def _plugin_bandwidths(X: np.ndarray, t: np.ndarray, kernel: KernelSpec, support: Support,
                       factor: float, allow_zero: bool):
    """Per-sample, per-point plug-in bandwidths for a batch ``X`` of shape (B, n).

    Mirrors :func:`jpscdf.bandwidth.select_bandwidth` in vectorized form;
    returns ``(h, clamped, capped)`` arrays of shape (B, P).
    """
    n = X.shape[1]
    mean = X.mean(axis=1, keepdims=True)
    tt = t[None, :]
    if support is Support.POSITIVE:
        if np.any(X < 0) or (not allow_zero and np.any(X <= 0)):
            raise ValueError("exponential reference requires positive observations")
        if np.any(mean <= 0):
            raise ValueError("exponential reference requires a positive mean")
        f = np.where(tt >= 0, np.exp(-np.maximum(tt, 0.0) / mean) / mean, 0.0)
        fp = -f / mean
        scale = mean
    else:
        var = np.mean((X - mean) ** 2, axis=1, keepdims=True)
        if np.any(var <= 0):
            raise ValueError("normal reference requires S^2 > 0")
        sd = np.sqrt(var)
        z = (tt - mean) / sd
        f = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sd)
        fp = -((tt - mean) / var) * f
        scale = sd
    if np.any(f <= 0):
        raise ValueError("plug-in density is zero at an evaluation point")
    floor = SLOPE_CLAMP * f / scale
    clamped = np.abs(fp) < floor
    fp = np.where(clamped, floor, fp)
    h = (f * (kernel.a - kernel.int_K2) / (n * (fp * kernel.int_x2k) ** 2)) ** (1.0 / 3.0) * factor
    h_max = (X.max(axis=1) - X.min(axis=1))[:, None]
    capped = (h > h_max) & (h_max > 0)
    return np.where(capped, h_max, h), clamped, capped


def _indicator_or_kernel(X: np.ndarray, t: np.ndarray, kernel: Optional[KernelSpec], h) -> np.ndarray:
    """Tensor of ``K_n(t_p - X_bi)`` with shape (B, P, n)."""
    if kernel is None:
        return (X[:, None, :] <= t[None, :, None]).astype(float)
    return kernel.cdf((t[None, :, None] - X[:, None, :]) / h[:, :, None])


def _srs_batch(X, t, kernel, h):
    return _indicator_or_kernel(X, t, kernel, h).mean(axis=2)


def _jps_batch(X, R, H, t, kernel, h):
    onehot = (R[:, :, None] == np.arange(1, H + 1)[None, None, :]).astype(float)
    counts = onehot.sum(axis=1)
    occupied = counts > 0
    weights = occupied / occupied.sum(axis=1, keepdims=True)
    inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=occupied)
    sums = np.einsum("bpn,bnh->bph", _indicator_or_kernel(X, t, kernel, h), onehot)
    return np.einsum("bph,bh->bp", sums, weights * inv)


@dataclass
class _ChunkResult:
    srs: np.ndarray
    jps: np.ndarray
    h_srs: Optional[np.ndarray]
    h_jps: Optional[np.ndarray]
    clamped: int = 0
    capped: int = 0


def _bandwidths_for(X, t_eval, kernel, mode, support, factor, allow_zero):
    if isinstance(mode, (int, float)) and not isinstance(mode, bool):
        return np.full((X.shape[0], t_eval.size), float(mode)), 0, 0
    if mode == "pointwise":
        h, cl, cp = _plugin_bandwidths(X, t_eval, kernel, support, factor, allow_zero)
    elif mode == "global":
        med = np.median(X, axis=1)
        hs = []
        cl = cp = 0
        for b in range(X.shape[0]):
            hb, c1, c2 = _plugin_bandwidths(X[b:b + 1], med[b:b + 1], kernel, support, factor, allow_zero)
            hs.append(hb[0, 0])
            cl += int(c1.sum())
            cp += int(c2.sum())
        return np.repeat(np.array(hs)[:, None], t_eval.size, axis=1), cl, cp
    else:
        raise ValueError(f"unknown bandwidth mode {mode!r}")
    return h, int(cl.sum()), int(cp.sum())


def _run_chunk(design, t_eval: np.ndarray, kernel_name: Optional[str], bandwidth, master_seed: int,
               start: int, stop: int, keep_h: bool = False) -> _ChunkResult:
    kernel = get_kernel(kernel_name) if kernel_name else None
    draws = [design.draw(replication_rng(master_seed, rep)) for rep in range(start, stop)]
    JX = np.stack([d[0] for d in draws])
    JR = np.stack([d[1] for d in draws])
    SX = np.stack([d[2] for d in draws])
    n, H = design.n, design.H
    batch = max(1, _BATCH_ELEMENTS // max(1, t_eval.size * n))
    srs_out, jps_out, hs_out, hj_out = [], [], [], []
    clamped = capped = 0
    factor = float(n * H * e_w2j(n, H)) ** (1.0 / 3.0)
    for lo in range(0, JX.shape[0], batch):
        sl = slice(lo, lo + batch)
        hs = hj = None
        if kernel is not None:
            hs, c1, c2 = _bandwidths_for(SX[sl], t_eval, kernel, bandwidth, design.support, 1.0, design.allow_zero)
            if isinstance(bandwidth, str):
                hj, c3, c4 = _bandwidths_for(JX[sl], t_eval, kernel, bandwidth, design.support, factor, design.allow_zero)
            else:
                hj, c3, c4 = hs, 0, 0
            clamped += c1 + c3
            capped += c2 + c4
            if keep_h:
                hs_out.append(hs)
                hj_out.append(hj)
        srs_out.append(_srs_batch(SX[sl], t_eval, kernel, hs))
        jps_out.append(_jps_batch(JX[sl], JR[sl], H, t_eval, kernel, hj))
    return _ChunkResult(
        np.concatenate(srs_out),
        np.concatenate(jps_out),
        np.concatenate(hs_out) if hs_out else None,
        np.concatenate(hj_out) if hj_out else None,
        clamped,
        capped,
    )


def _chunks(reps: int):
    return [(s, min(reps, s + CHUNK_SIZE)) for s in range(0, reps, CHUNK_SIZE)]


def _map_chunks(design, t_eval, kernel_name, bandwidth, master_seed, reps, workers, keep_h=False):
    jobs = _chunks(reps)
    workers = default_workers() if workers is None else max(1, int(workers))
    args = [(design, t_eval, kernel_name, bandwidth, master_seed, s, e, keep_h) for s, e in jobs]
    if workers == 1 or len(jobs) == 1:
        yield from (_run_chunk(*a) for a in args)
        return
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        yield from pool.map(_run_chunk, *zip(*args))


def _normalize_bandwidth(bandwidth):
    if isinstance(bandwidth, str):
        if bandwidth.startswith("fixed:"):
            value = float(bandwidth.split(":", 1)[1])
        elif bandwidth in ("pointwise", "auto-pointwise"):
            return "pointwise"
        elif bandwidth in ("global", "auto-global"):
            return "global"
        else:
            raise ValueError(f"unknown bandwidth mode {bandwidth!r}")
    else:
        value = float(bandwidth)
    if not value > 0:
        raise ValueError("fixed bandwidth must be positive")
    return value


@dataclass
class SimulatedEstimates:
    """Per-replication estimates, shape (reps, points), for both arms."""

    t: np.ndarray
    srs: np.ndarray
    jps: np.ndarray
    h_srs: Optional[np.ndarray] = None
    h_jps: Optional[np.ndarray] = None
    clamped: int = 0
    capped: int = 0


def simulate_estimates(design, t_eval, *, kernel=None, bandwidth="pointwise", reps: int = 1000,
                       master_seed: int = 0, workers: Optional[int] = 1, keep_bandwidths: bool = False) -> SimulatedEstimates:
    """Run ``reps`` replications of ``design`` and return every estimate.

    ``kernel=None`` evaluates the EDFs.  ``bandwidth`` is ``"pointwise"``,
    ``"global"`` (plug-in at the sample median) or a positive number.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    kname = get_kernel(kernel).name if kernel is not None else None
    bw = _normalize_bandwidth(bandwidth) if kernel is not None else None
    parts = list(_map_chunks(design, t_eval, kname, bw, master_seed, reps, workers, keep_bandwidths))
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts]) if getattr(parts[0], name) is not None else None
    return SimulatedEstimates(
        t_eval, cat("srs"), cat("jps"), cat("h_srs"), cat("h_jps"),
        sum(p.clamped for p in parts), sum(p.capped for p in parts),
    )


def mc_standard_error(values) -> float | np.ndarray:
    """Standard error of the mean of ``values`` along the first axis."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        raise ValueError("need at least two replications")
    # shifting by the first row is exact for constant input and leaves the SD unchanged
    se = np.std(v - v[:1], axis=0, ddof=1) / math.sqrt(v.shape[0])
    return float(se) if np.ndim(se) == 0 else se


def compare_arms(sq_err_srs, sq_err_jps):
    """MSEs, their standard errors, RE and a delta-method SE of RE.

    Inputs are per-replication squared errors with shape (reps, points).
    """
    a = np.asarray(sq_err_srs, dtype=float)
    b = np.asarray(sq_err_jps, dtype=float)
    mse_a, mse_b = a.mean(axis=0), b.mean(axis=0)
    se_a, se_b = mc_standard_error(a), mc_standard_error(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        re = mse_a / mse_b
        re_se = np.abs(re) * np.sqrt((se_a / mse_a) ** 2 + (se_b / mse_b) ** 2)
    return mse_a, se_a, mse_b, se_b, re, re_se


@dataclass
class ReCurve:
    p_grid: np.ndarray
    mse_srs: np.ndarray
    se_srs: np.ndarray
    mse_jps: np.ndarray
    se_jps: np.ndarray
    re: np.ndarray
    re_se: np.ndarray
    config: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def re_from_design(design, p_grid, kernel, bandwidth, reps, master_seed, workers) -> ReCurve:
    if reps < 100:
        raise ValueError("reps must be >= 100")
    p = np.asarray(p_grid, dtype=float)
    if p.size == 0:
        raise ValueError("p_grid must not be empty")
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("p_grid must lie inside (0, 1)")
    kernel = get_kernel(kernel)
    est = simulate_estimates(design, design.eval_points(p), kernel=kernel, bandwidth=bandwidth,
                             reps=reps, master_seed=master_seed, workers=workers)
    truth = design.truth(p)[None, :]
    mse_s, se_s, mse_j, se_j, re, re_se = compare_arms((est.srs - truth) ** 2, (est.jps - truth) ** 2)
    config = {**design.describe(), "kernel": kernel.name, "bandwidth": str(bandwidth),
              "reps": reps, "seed": master_seed}
    meta = {"clamp_events": est.clamped, "cap_events": est.capped}
    return ReCurve(p, mse_s, se_s, mse_j, se_j, re, re_se, config, meta)


def re_curve(dist, n: int, H: int, rho: float = 1.0, kernel="epanechnikov", p_grid: Sequence[float] = DEFAULT_P_GRID,
             reps: int = 100_000, master_seed: int = 0, *, workers: Optional[int] = None,
             bandwidth="pointwise", coupled: bool = False) -> ReCurve:
    """Monte Carlo ``RE(p) = MSE_srs / MSE_jps`` of the kernel CDF estimators at ``Q_p``."""
    design = SyntheticDesign(get_distribution(dist), n, H, rho, coupled)
    return re_from_design(design, p_grid, kernel, bandwidth, reps, master_seed, workers)
