"""Statistical primitives against scipy oracles and closed forms."""
import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from levelcross import stats


def test_kolmogorov_sf_matches_scipy():
    for x in (0.3, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0):
        assert stats.kolmogorov_sf(x) == pytest.approx(
            float(scipy.special.kolmogorov(x)), abs=1e-12
        )


def test_kolmogorov_sf_edges():
    assert stats.kolmogorov_sf(0.0) == 1.0
    assert stats.kolmogorov_sf(-1.0) == 1.0
    assert stats.kolmogorov_sf(50.0) == 0.0


def test_ks_test_against_scipy_one_sample():
    rng = np.random.default_rng(5)
    x = rng.exponential(1.0, size=400)
    rep = stats.ks_test(x, lambda t: 1.0 - np.exp(-np.maximum(t, 0.0)))
    ref = scipy.stats.kstest(x, lambda t: 1.0 - np.exp(-np.maximum(t, 0.0)),
                             mode="asymp")
    assert rep.statistic == pytest.approx(ref.statistic, abs=1e-12)
    # same asymptotic tail, same scaling convention
    assert rep.pvalue == pytest.approx(float(ref.pvalue), rel=1e-6, abs=1e-9)


def test_ks_null_calibration_fixed_seed():
    rng = np.random.default_rng(0xCA11)
    x = rng.exponential(1.0, size=2000)
    rep = stats.ks_test(x, lambda t: 1.0 - np.exp(-np.maximum(t, 0.0)))
    assert rep.pvalue > 0.01


def test_ks_degenerate_sample_rejects():
    x = np.full(500, 0.7)
    rep = stats.ks_test(x, lambda t: 1.0 - np.exp(-np.maximum(t, 0.0)))
    # all mass at one point: D = max(F(t0), 1 - F(t0))
    f0 = 1.0 - math.exp(-0.7)
    assert rep.statistic == pytest.approx(max(f0, 1.0 - f0), abs=1e-9)
    assert rep.pvalue < 1e-10


def test_chi2_matches_scipy():
    obs = np.array([48.0, 30.0, 12.0, 10.0])
    exp = np.array([50.0, 25.0, 15.0, 10.0])
    rep = stats.chi2_test(obs, exp, ddof=1)
    ref_stat = float(((obs - exp) ** 2 / exp).sum())
    assert rep.statistic == pytest.approx(ref_stat, rel=1e-12)
    assert rep.df == obs.size - 1 - 1
    assert rep.pvalue == pytest.approx(
        float(scipy.stats.chi2.sf(ref_stat, rep.df)), rel=1e-10
    )


def test_pool_bins_enforces_minimum():
    obs = np.array([50.0, 30.0, 10.0, 4.0, 2.0, 1.0])
    exp = np.array([45.0, 30.0, 12.0, 6.0, 3.0, 1.0])
    obs_p, exp_p = stats.pool_bins(obs, exp, min_expected=5.0)
    assert np.all(exp_p >= 5.0)
    assert obs_p.sum() == pytest.approx(obs.sum())
    assert exp_p.sum() == pytest.approx(exp.sum())


def test_pool_bins_deficient_head_merges_right():
    obs = np.array([1.0, 100.0])
    exp = np.array([0.5, 99.0])
    obs_p, exp_p = stats.pool_bins(obs, exp)
    assert obs_p.size == 1 and exp_p.size == 1


def test_ratio_estimate_recovers_known_ratio():
    # y_i = r * l_i + noise; the ratio estimator is consistent and its
    # linearized se covers the truth
    rng = np.random.default_rng(17)
    lengths = rng.uniform(0.5, 2.0, size=5000)
    y = 3.0 * lengths + rng.normal(0, 0.1, size=5000)
    r, se = stats.ratio_estimate(y, lengths)
    assert abs(r - 3.0) <= 4 * se
    assert se < 0.01


def test_ratio_estimate_exact_when_proportional():
    lengths = np.array([1.0, 2.0, 3.0])
    r, se = stats.ratio_estimate(2.5 * lengths, lengths)
    assert r == pytest.approx(2.5, abs=1e-14)
    assert se == pytest.approx(0.0, abs=1e-14)


def test_block_estimate_iid_coverage():
    rng = np.random.default_rng(23)
    x = rng.normal(1.0, 2.0, size=100_000)
    mean, se = stats.block_estimate(x)
    assert mean == pytest.approx(x.mean(), abs=1e-12)
    assert abs(mean - 1.0) <= 4 * se
    # block se on iid data ~ sigma/sqrt(n)
    assert se == pytest.approx(2.0 / math.sqrt(x.size), rel=0.15)
