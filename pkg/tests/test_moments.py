import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from jpscdf import moments
from jpscdf.distributions import DIST_NAMES, dist_quantile, get_distribution, order_stat_cdf, order_stat_pdf
from jpscdf.kernels import KERNEL_NAMES, get_kernel
from jpscdf.moments import (
    QuadratureError,
    e_w2j,
    e_w2j_oracle,
    efficiency_delta,
    finite_n_variance,
    jps_asym_variance,
    jps_variance_by_strata,
    jps_variance_pooled,
    srs_variance,
    stratum_moments,
    var_w,
    var_w_oracle,
    weight_moments,
)


def occupancy_oracle(n, H, exact=True):
    """``(E W_1^2, E W_1^2 J_1)`` by conditioning on N_1.

    Given N_1 = k the other n - k units fall uniformly into H - 1 strata;
    the number of those that are occupied follows the classical occupancy
    chain, advanced one unit at a time.
    """
    one = Fraction(1) if exact else 1.0
    q = one / (H - 1)
    occ = [one] + [0 * one] * (H - 1)  # occupancy law after m units, m = 0
    laws = [occ]
    for _ in range(n - 1):
        nxt = [0 * one] * H
        for j, pj in enumerate(occ):
            if pj:
                nxt[j] += pj * j * q
                if j < H - 1:
                    nxt[j + 1] += pj * (H - 1 - j) * q
        occ = nxt
        laws.append(occ)
    p = one / H
    ew2 = ew2j = 0 * one
    for k in range(1, n + 1):
        pk = math.comb(n, k) * p**k * (1 - p) ** (n - k)
        inner = sum(pj / (j + 1) ** 2 for j, pj in enumerate(laws[n - k]))
        ew2 += pk * inner
        ew2j += pk * inner / k
    return ew2, ew2j


# --- exact weight moments ----------------------------------------------------------


def test_hand_values():
    assert var_w(2, 2) == Fraction(1, 8)
    assert e_w2j(2, 2) == Fraction(1, 4)
    assert e_w2j(1, 3) == Fraction(1, 3)
    assert e_w2j_oracle(2, 2) == Fraction(1, 4)
    assert e_w2j_oracle(3, 2) == Fraction(1, 8) * Fraction(1, 3) + Fraction(3, 8) * Fraction(1, 8) + Fraction(3, 8) * Fraction(1, 4)
    for H in (2, 3, 4):
        assert var_w(1, H) == Fraction(H - 1, H * H)
        assert e_w2j_oracle(1, H) == Fraction(1, H)


def test_closed_form_equals_enumeration():
    for n in range(1, moments.ORACLE_MAX_N + 1):
        for H in range(2, moments.ORACLE_MAX_H + 1):
            assert e_w2j(n, H) == e_w2j_oracle(n, H), (n, H)
            assert var_w(n, H) == var_w_oracle(n, H), (n, H)


@pytest.mark.parametrize("n, H", [(11, 5), (20, 7), (37, 3), (60, 10)])
def test_closed_form_equals_occupancy_recursion(n, H):
    ew2, ew2j = occupancy_oracle(n, H)
    assert e_w2j(n, H) == ew2j
    assert var_w(n, H) == ew2 - Fraction(1, H * H)


@pytest.mark.parametrize("n, H", [(300, 10), (1000, 3), (1000, 10)])
def test_large_n_against_float_recursion(n, H):
    # V(W) itself is not checked here: E W^2 - 1/H^2 cancels catastrophically in floats
    _, ew2j = occupancy_oracle(n, H, exact=False)
    assert float(e_w2j(n, H)) == pytest.approx(ew2j, rel=1e-11)


def test_argument_validation():
    for f in (var_w, e_w2j):
        with pytest.raises(ValueError):
            f(5, 1)
        with pytest.raises(ValueError):
            f(0, 3)
    with pytest.raises(ValueError):
        e_w2j_oracle(moments.ORACLE_MAX_N + 1, 2)
    with pytest.raises(ValueError):
        var_w_oracle(3, moments.ORACLE_MAX_H + 1)


def test_weight_moments_container():
    wm = weight_moments(2, 2)
    assert (wm.var_w_float, wm.e_w2j_float, wm.nH_e_w2j) == (0.125, 0.25, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 120), st.integers(2, 12))
def test_weight_moments_ranges(n, H):
    v, e = var_w(n, H), e_w2j(n, H)
    assert 0 <= v < 1
    assert 0 < e <= 1
    assert var_w(n + 1, H) < v
    # W^2 J <= 1 and it vanishes unless stratum 1 is occupied
    assert e <= Fraction(1, H)


def test_asymptotic_trend():
    for H in (3, 5, 10):
        nv = [n * float(var_w(n, H)) for n in (10, 50, 300, 1000)]
        assert all(a > b for a, b in zip(nv, nv[1:]))
        assert nv[-1] <= 0.01
        assert abs(1000 * H * float(e_w2j(1000, H)) - 1) <= 0.05


# --- stratum moments and variance formulas ------------------------------------------


def test_asymptotic_variance_examples():
    for name in DIST_NAMES:
        med = dist_quantile(name, 0.5)
        assert jps_asym_variance(name, med, 2) == pytest.approx(0.1875, abs=1e-12)
        assert jps_asym_variance(name, med, 1) == pytest.approx(0.25, abs=1e-12)
        vals = [jps_asym_variance(name, med, H) for H in range(2, 11)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        jps_asym_variance("exp1", -1.0, 3)


def test_delta_examples():
    assert efficiency_delta("normal", 0.0, 2) == pytest.approx(0.25, abs=1e-12)
    assert efficiency_delta("normal", 0.3, 4, ranking="random") == 0.0
    assert efficiency_delta("t5", 0.0, 5, kernel="epanechnikov", h=0.4, ranking="random") == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        efficiency_delta("exp1", -2.0, 3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(DIST_NAMES), st.floats(0.02, 0.98), st.integers(2, 10))
def test_delta_below_one(name, p, H):
    t = dist_quantile(name, p)
    d = efficiency_delta(name, t, H)
    assert 0.0 <= d < 1.0
    # asymptotic JPS variance = SRS variance * (1 - delta)
    F = p
    assert jps_asym_variance(name, t, H) == pytest.approx(F * (1 - F) * (1 - d), rel=1e-9)


def test_kernel_stratum_moments_by_parts():
    # E K((t - X_[r])/h) = int k(u) F_[r](t - h u) du, a different integrand than the one used internally
    dist, t, H, h = get_distribution("gamma2"), 1.3, 4, 0.35
    k = get_kernel("cosine")
    mom = stratum_moments(dist, t, H, k, h)
    for r in range(1, H + 1):
        m1 = integrate.quad(lambda u: k.pdf(u) * order_stat_cdf(dist, t - h * u, r, H), -1, 1, epsabs=1e-13)[0]
        assert mom.mean[r - 1] == pytest.approx(m1, abs=1e-10)
        m2 = integrate.quad(lambda x: k.cdf((t - x) / h) ** 2 * order_stat_pdf(dist, x, r, H), 0, 40, points=[t - h, t + h], limit=200)[0]
        assert mom.var[r - 1] == pytest.approx(m2 - m1 * m1, abs=1e-9)
    assert np.mean(mom.mean) == pytest.approx(mom.pooled_mean, abs=1e-10)


def test_stratum_moments_validation():
    with pytest.raises(ValueError):
        stratum_moments("normal", 0.0, 3, "epanechnikov", None)
    with pytest.raises(ValueError):
        stratum_moments("normal", 0.0, 3, ranking="sloppy")


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(DIST_NAMES),
    st.floats(0.02, 0.98),
    st.integers(2, 8),
    st.integers(2, 200),
    st.one_of(st.none(), st.tuples(st.sampled_from(KERNEL_NAMES), st.floats(0.05, 1.5))),
)
def test_two_variance_decompositions_agree(name, p, H, n, kern):
    t = dist_quantile(name, p)
    kernel, h = kern if kern else (None, None)
    mom = stratum_moments(name, t, H, kernel, h)
    assert jps_variance_by_strata(mom, n) == pytest.approx(jps_variance_pooled(mom, n), abs=1e-10)


def test_random_ranking_reduces_to_pooled_variance():
    for kernel, h in ((None, None), ("triangular", 0.5)):
        mom = stratum_moments("laplace", 0.4, 5, kernel, h, ranking="random")
        v = finite_n_variance("laplace", 0.4, 40, 5, kernel, h, ranking="random")
        assert v == pytest.approx(5 * float(e_w2j(40, 5)) * mom.pooled_var, rel=1e-12)


def test_finite_variance_converges_to_asymptotic():
    for H in (2, 3, 5):
        v = finite_n_variance("normal", 0.0, 300, H)
        assert 300 * v / jps_asym_variance("normal", 0.0, H) == pytest.approx(1.0, rel=0.05)


def test_srs_variance():
    assert srs_variance("normal", 0.0, 50) == pytest.approx(0.25 / 50)


def test_finite_variance_matches_monte_carlo():
    from jpscdf.sim import SyntheticDesign, simulate_estimates

    design = SyntheticDesign(get_distribution("normal"), 50, 3, 1.0)
    est = simulate_estimates(design, [0.0], reps=20000, master_seed=99)
    x = est.jps[:, 0]
    m = x.size
    sample_var = x.var(ddof=1)
    se = math.sqrt(np.mean((x - x.mean()) ** 4) - sample_var**2) / math.sqrt(m)
    assert abs(sample_var - finite_n_variance("normal", 0.0, 50, 3)) < 3 * se


def test_quadrature_failure_is_reported(monkeypatch):
    monkeypatch.setattr(moments.integrate, "quad", lambda *a, **k: (1.0, 1.0, {}))
    with pytest.raises(QuadratureError):
        stratum_moments("normal", 0.0, 3, "epanechnikov", 0.5)
