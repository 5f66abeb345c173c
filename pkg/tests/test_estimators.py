import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jpscdf.estimators import (
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
from jpscdf.kernels import KERNEL_NAMES, get_kernel

EPA = get_kernel("epanechnikov")


def naive_kdf_jps(x, r, H, kernel, h, t):
    """Direct double loop over strata and observations, no windowing."""
    groups = [[xi for xi, ri in zip(x, r) if ri == s] for s in range(1, H + 1)]
    occupied = [g for g in groups if g]
    return sum(np.mean([kernel.cdf((t - xi) / h) for xi in g]) for g in occupied) / len(occupied)


@st.composite
def jps_samples(draw, max_n=25):
    H = draw(st.integers(2, 6))
    n = draw(st.integers(1, max_n))
    x = draw(st.lists(st.floats(-100, 100, allow_nan=False), min_size=n, max_size=n))
    r = draw(st.lists(st.integers(1, H), min_size=n, max_size=n))
    return JpsSample(np.array(x), np.array(r), H)


# --- post-strata -------------------------------------------------------------------


def test_post_strata_examples():
    ps = post_strata(JpsSample.from_pairs([(1.0, 1), (2.0, 2), (3.0, 1)], H=2))
    assert ps.counts.tolist() == [2, 1]
    assert ps.d_n == 2
    assert ps.weights.tolist() == [0.5, 0.5]
    assert ps.inv_counts.tolist() == [0.5, 1.0]

    ps = post_strata(JpsSample(np.arange(5.0), [1] * 5, 3))
    assert ps.counts.tolist() == [5, 0, 0]
    assert (ps.d_n, ps.weights.tolist(), ps.inv_counts.tolist()) == (1, [1.0, 0.0, 0.0], [0.2, 0.0, 0.0])

    ps = post_strata(JpsSample([4.0], [2], 3))
    assert ps.counts.tolist() == [0, 1, 0]
    assert ps.weights.tolist() == [0.0, 1.0, 0.0]


@pytest.mark.parametrize(
    "x, r, H",
    [([], [], 2), ([1.0], [1], 1), ([1.0, 2.0], [1], 2), ([1.0], [3], 2), ([1.0], [0], 2), ([np.nan], [1], 2), ([1.0], [1.5], 2)],
)
def test_sample_validation(x, r, H):
    with pytest.raises(ValueError):
        JpsSample(np.array(x, dtype=float), np.array(r), H)


@given(jps_samples())
def test_post_strata_invariants(sample):
    ps = post_strata(sample)
    assert ps.counts.sum() == sample.n
    assert ps.d_n == np.count_nonzero(ps.counts) >= 1
    assert ps.weights.sum() == pytest.approx(1.0)
    occupied = ps.counts > 0
    assert np.allclose(ps.inv_counts[occupied], 1.0 / ps.counts[occupied])
    assert np.all(ps.inv_counts[~occupied] == 0)


# --- point examples ----------------------------------------------------------------


def test_edf_srs_examples():
    assert edf_srs([1, 2, 3], 2) == pytest.approx(2 / 3)
    assert edf_srs([1, 2, 3], 0.5) == 0.0
    assert edf_srs([1, 2, 3], 3) == 1.0
    assert edf_srs([1, 1, 2], 1) == pytest.approx(2 / 3)


def test_kdf_srs_examples():
    assert kdf_srs([0.0], EPA, 1.0, 0.0) == 0.5
    assert kdf_srs([0.0, 1.0], EPA, 1.0, 0.5) == pytest.approx(0.5, abs=1e-15)
    xs = [0.3, -1.2, 2.2]
    assert kdf_srs(xs, EPA, 0.4, 2.2 + 0.4) == 1.0
    with pytest.raises(ValueError):
        kdf_srs(xs, EPA, 0.0, 0.0)
    with pytest.raises(ValueError):
        kdf_srs(xs, EPA, -1.0, 0.0)


def test_edf_jps_examples():
    s = JpsSample.from_pairs([(1.0, 1), (2.0, 2), (3.0, 1)], H=2)
    assert edf_jps(s, 2.5) == pytest.approx(0.75)
    assert edf_jps(s, 0.0) == 0.0


def test_kdf_jps_examples():
    s = JpsSample.from_pairs([(0.0, 1), (0.0, 2)], H=2)
    assert kdf_jps(s, EPA, 1.0, 0.0) == 0.5
    with pytest.raises(ValueError):
        kdf_jps(s, EPA, 0.0, 0.0)
    with pytest.raises(ValueError):
        kpdf_jps(s, EPA, -0.1, 0.0)


def test_small_bandwidth_limit_is_edf():
    rng = np.random.default_rng(5)
    s = JpsSample(rng.normal(size=30), rng.integers(1, 4, size=30), 3)
    t = np.linspace(-2, 2, 17)
    assert np.allclose(kdf_jps(s, EPA, 1e-9, t), edf_jps(s, t), atol=0)


def test_array_and_scalar_agree():
    rng = np.random.default_rng(8)
    s = JpsSample(rng.normal(size=20), rng.integers(1, 5, size=20), 4)
    t = np.linspace(-3, 3, 13)
    vec = kdf_jps(s, EPA, 0.6, t)
    assert isinstance(kdf_jps(s, EPA, 0.6, 0.0), float)
    assert np.allclose(vec, [kdf_jps(s, EPA, 0.6, ti) for ti in t], atol=0, rtol=0)


@pytest.mark.parametrize("kind", KERNEL_NAMES)
def test_windowed_evaluation_matches_naive_sum(kind):
    rng = np.random.default_rng(13)
    x, r = rng.normal(size=40), rng.integers(1, 4, size=40)
    s, k = JpsSample(x, r, 3), get_kernel(kind)
    for t in np.linspace(-3, 3, 25):
        assert kdf_jps(s, k, 0.35, t) == pytest.approx(naive_kdf_jps(x, r, 3, k, 0.35, t), abs=1e-14)


# --- kernel PDF --------------------------------------------------------------------


def test_kpdf_support_and_mass():
    rng = np.random.default_rng(1)
    s = JpsSample(rng.normal(size=25), rng.integers(1, 4, size=25), 3)
    h = 0.5
    assert kpdf_jps(s, EPA, h, s.x.max() + 1.01 * h) == 0.0
    grid = np.linspace(s.x.min() - 1, s.x.max() + 1, 20001)
    assert np.trapezoid(kpdf_jps(s, EPA, h, grid), grid) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("kind", ["gaussian", "cosine", "epanechnikov"])
def test_kpdf_is_derivative_of_kdf(kind):
    rng = np.random.default_rng(2)
    s, k = JpsSample(rng.normal(size=15), rng.integers(1, 3, size=15), 2), get_kernel(kind)
    h, step = 0.8, 1e-4
    kinks = np.concatenate([s.x - k.a * h, s.x + k.a * h])
    t = np.array([v for v in np.linspace(-2, 2, 81) if np.min(np.abs(kinks - v)) > 10 * step])
    fd = (kdf_jps(s, k, h, t + step) - kdf_jps(s, k, h, t - step)) / (2 * step)
    assert np.max(np.abs(fd - kpdf_jps(s, k, h, t))) < 1e-6


# --- estimate_cdf container --------------------------------------------------------


def test_estimate_cdf_tags_and_bandwidths():
    xs = np.array([0.1, 0.5, 0.9])
    s = JpsSample(xs, [1, 2, 2], 2)
    t = [0.2, 0.6]
    assert estimate_cdf(t, xs=xs).estimator_tag is EstimatorTag.EDF_SRS
    assert estimate_cdf(t, sample=s).estimator_tag is EstimatorTag.EDF_JPS
    e = estimate_cdf(t, sample=s, kernel=EPA, h=[0.3, 0.4])
    assert e.estimator_tag is EstimatorTag.KDF_JPS
    assert (e.bandwidth_at(0), e.bandwidth_at(1)) == (0.3, 0.4)
    assert e.values[1] == kdf_jps(s, EPA, 0.4, 0.6)
    e = estimate_cdf(t, xs=xs, kernel=EPA, h=0.3)
    assert e.estimator_tag is EstimatorTag.KDF_SRS and e.bandwidth_at(1) == 0.3 and e.n == 3 and e.H is None
    with pytest.raises(ValueError):
        estimate_cdf(t, xs=xs, sample=s)
    with pytest.raises(ValueError):
        estimate_cdf(t, xs=xs, kernel=EPA)


# --- properties --------------------------------------------------------------------


@settings(max_examples=150)
@given(jps_samples(), st.sampled_from(KERNEL_NAMES), st.floats(0.01, 20), st.floats(-150, 150), st.floats(-150, 150))
def test_kdf_jps_monotone_and_bounded(sample, kind, h, t1, t2):
    k = get_kernel(kind)
    lo, hi = min(t1, t2), max(t1, t2)
    a, b = kdf_jps(sample, k, h, lo), kdf_jps(sample, k, h, hi)
    assert 0.0 <= a <= b <= 1.0
    assert edf_jps(sample, lo) <= edf_jps(sample, hi)


@settings(max_examples=150)
@given(jps_samples(), st.sampled_from(KERNEL_NAMES), st.floats(0.01, 20), st.floats(0, 50))
def test_kdf_jps_exact_tails(sample, kind, h, gap):
    k = get_kernel(kind)
    # margin keeps t strictly outside the support after float rounding
    margin = 1e-9 * (1.0 + np.abs(sample.x).max())
    assert kdf_jps(sample, k, h, sample.x.min() - k.a * h - margin - gap) == 0.0
    assert kdf_jps(sample, k, h, sample.x.max() + k.a * h + margin + gap) == 1.0


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.integers(2, 6), st.data())
def test_single_stratum_collapses_to_srs(xs, H, data):
    rank = data.draw(st.integers(1, H))
    s = JpsSample(np.array(xs), np.full(len(xs), rank), H)
    h = data.draw(st.floats(0.01, 10))
    t = data.draw(st.floats(-120, 120))
    assert edf_jps(s, t) == pytest.approx(edf_srs(xs, t), abs=1e-15)
    assert kdf_jps(s, EPA, h, t) == pytest.approx(kdf_srs(xs, EPA, h, t), abs=1e-15)


@given(jps_samples(), st.floats(-120, 120))
def test_edf_jps_is_convex_combination(sample, t):
    strata = [g for g in sample.strata() if g.size]
    per = [edf_srs(g, t) for g in strata]
    assert min(per) - 1e-15 <= edf_jps(sample, t) <= max(per) + 1e-15


@given(jps_samples(), st.floats(-120, 120))
def test_estimates_are_permutation_invariant(sample, t):
    perm = np.random.default_rng(0).permutation(sample.n)
    shuffled = JpsSample(sample.x[perm], sample.ranks[perm], sample.H)
    assert edf_jps(shuffled, t) == edf_jps(sample, t)
    assert kdf_jps(shuffled, EPA, 1.0, t) == pytest.approx(kdf_jps(sample, EPA, 1.0, t), abs=1e-14)


def test_cdf_estimate_is_plain_data():
    e = CdfEstimate(np.array([0.0]), np.array([0.5]), EstimatorTag.EDF_SRS)
    assert e.bandwidth_at(0) is None
