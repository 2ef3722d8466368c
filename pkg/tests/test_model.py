"""Model catalog, jump kernels, validation, and scenario classification."""
import dataclasses
import math

import numpy as np
import pytest

import levelcross as lc
from levelcross.model import ModelError


# --- catalog characteristics ------------------------------------------------


def test_lsn_drift_value(lsn):
    assert float(lsn.drift(2.0)) == pytest.approx(-2.0, abs=1e-15)


def test_tanh_declared_drift_limit(tanh_model):
    assert tanh_model.drift.limit_pos == -1.0
    assert tanh_model.drift.limit_neg == 1.0


def test_updrift_jump_means(updrift):
    # Exp(1) negative jumps: m-(x) = 1, m+(x) = 0 for every x
    assert updrift.kernel.mean_neg(5.0) == pytest.approx(1.0, abs=1e-15)
    assert updrift.kernel.mean_pos(5.0) == pytest.approx(0.0, abs=1e-15)


def test_catalog_rejects_unknown_name():
    with pytest.raises(ModelError, match="unknown catalog model"):
        lc.catalog("ornstein_uhlenbeck")


def test_catalog_rejects_bad_params():
    with pytest.raises(ModelError, match="alpha"):
        lc.catalog("linear_shot_noise", c=1.0, lam0=1.0, alpha=-2.0)


# --- exponential jump kernel ------------------------------------------------


def test_exp_kernel_moments_positive():
    k = lc.exp_jump_kernel(2.0)
    assert k.sign_support == "positive"
    assert k.mean_pos(0.0) == pytest.approx(0.5, abs=1e-15)
    assert k.mean_neg(0.0) == 0.0
    assert k.limit_law.mean == pytest.approx(0.5, abs=1e-15)


def test_exp_kernel_moments_negative():
    k = lc.exp_jump_kernel(1.0, sign=-1)
    assert k.sign_support == "negative"
    assert k.mean_pos(0.0) == 0.0
    assert k.mean_neg(0.0) == pytest.approx(1.0, abs=1e-15)
    assert k.limit_law.mean == pytest.approx(-1.0, abs=1e-15)


def test_exp_kernel_shifted_split_moments():
    # z = -1 + Exp(1): m+ = E z^+ = e^{-1}, m- = E z^- = e^{-1} - E z = e^{-1}
    k = lc.exp_jump_kernel(1.0, sign=1, shift=-1.0)
    assert k.sign_support == "mixed"
    assert k.mean_pos(0.0) == pytest.approx(math.exp(-1.0), abs=1e-14)
    assert k.mean_neg(0.0) == pytest.approx(math.exp(-1.0), abs=1e-14)
    # consistency: m+ - m- = E z = shift + 1/alpha = 0
    assert k.mean_pos(0.0) - k.mean_neg(0.0) == pytest.approx(k.limit_law.mean, abs=1e-14)


def test_exp_kernel_mgf_and_domain():
    k = lc.exp_jump_kernel(2.0)
    # E e^{wZ} = alpha/(alpha - w) for w < alpha
    assert k.mgf(0.0, 1.0) == pytest.approx(2.0, abs=1e-14)
    assert k.limit_law.mgf_sup == 2.0
    with pytest.raises(ModelError, match="mgf undefined"):
        k.mgf(0.0, 2.0)
    # negative jumps have an entire mgf on w >= 0
    kn = lc.exp_jump_kernel(1.0, sign=-1)
    assert kn.limit_law.mgf_sup == math.inf
    assert kn.mgf(0.0, 1.0) == pytest.approx(0.5, abs=1e-14)


def test_exp_kernel_density_matches_cdf():
    k = lc.exp_jump_kernel(2.0, sign=-1, scale=1.5, shift=0.5)
    z = np.linspace(-6.0, 2.0, 2001)
    dens = k.density(0.0, z)
    num_cdf = np.cumsum(dens) * (z[1] - z[0])
    # integral of the density reproduces the cdf up to quadrature error
    ref = k.limit_law.cdf(z) - k.limit_law.cdf(z[0])
    assert np.max(np.abs(num_cdf - ref)) < 5e-3


def test_exp_kernel_sampler_law():
    k = lc.exp_jump_kernel(2.0, sign=-1, shift=-0.25)
    rng = np.random.default_rng(31)
    draws = k.sample_block(50_000, rng)
    from levelcross import stats
    rep = stats.ks_test(draws, k.limit_law.cdf)
    assert rep.pvalue > 0.01


def test_exp_kernel_invalid_params():
    with pytest.raises(ModelError):
        lc.exp_jump_kernel(0.0)
    with pytest.raises(ModelError):
        lc.exp_jump_kernel(1.0, sign=2)
    with pytest.raises(ModelError):
        lc.exp_jump_kernel(1.0, scale=-1.0)


# --- validation -------------------------------------------------------------


def test_validate_rejects_wrong_zero(lsn):
    bad = dataclasses.replace(
        lsn, drift=dataclasses.replace(lsn.drift, zeros=(1.0,))
    )
    with pytest.raises(ModelError, match="declared zero"):
        lc.validate(bad)


def test_validate_rejects_unsorted_zeros(lsn):
    bad = dataclasses.replace(
        lsn, drift=dataclasses.replace(lsn.drift, zeros=(1.0, 0.0))
    )
    with pytest.raises(ModelError, match="sorted"):
        lc.validate(bad)


def test_validate_rejects_negative_rate(lsn):
    bad = dataclasses.replace(
        lsn, rate=lc.JumpRate(fn=lambda x: np.asarray(x, dtype=float), constant=None)
    )
    with pytest.raises(ModelError, match="nonnegative"):
        lc.validate(bad)


def test_validate_rejects_unsound_local_bound(lsn):
    bad = dataclasses.replace(
        lsn,
        rate=lc.JumpRate(fn=lsn.rate.fn, local_bound=lambda a, b: 0.5, constant=None),
    )
    with pytest.raises(ModelError, match="local_bound"):
        lc.validate(bad)


def test_validate_rejects_undeclared_discontinuity():
    m = lc.Model(
        drift=lc.Drift(fn=lambda x: np.where(np.asarray(x) < 0, 1.0, -1.0) + 0.0),
        rate=lc.JumpRate(fn=lambda x: np.ones_like(np.asarray(x, dtype=float))),
        kernel=lc.exp_jump_kernel(1.0),
        working_interval=(-10.0, 10.0),
    )
    with pytest.raises(ModelError, match="disconti"):
        lc.validate(m)


def test_validate_rejects_inward_pointing_discontinuity():
    # mu jumps from +1 to -1 at 0: both sides push into the point, no orbit
    m = lc.Model(
        drift=lc.Drift(
            fn=lambda x: np.where(np.asarray(x) < 0, 1.0, -1.0) + 0.0,
            discontinuities=(0.0,),
        ),
        rate=lc.JumpRate(fn=lambda x: np.ones_like(np.asarray(x, dtype=float))),
        kernel=lc.exp_jump_kernel(1.0),
        working_interval=(-10.0, 10.0),
    )
    with pytest.raises(ModelError, match="points inward"):
        lc.validate(m)


def test_validate_rejects_sign_support_lie():
    k = dataclasses.replace(lc.exp_jump_kernel(1.0), sign_support="negative")
    m = lc.Model(
        drift=lc.Drift(fn=lambda x: -np.asarray(x, dtype=float), zeros=(0.0,)),
        rate=lc.JumpRate(fn=lambda x: np.ones_like(np.asarray(x, dtype=float))),
        kernel=k,
        working_interval=(0.0, 50.0),
    )
    with pytest.raises(ModelError, match="declared negative"):
        lc.validate(m)


def test_catalog_models_validate(lsn, tanh_model, updrift, stress):
    for m in (lsn, tanh_model, updrift, stress):
        lc.validate(m)  # factories validate already; must stay idempotent


# --- tail envelope and scenarios ---------------------------------------------


def test_tail_envelope_lsn_values(lsn):
    env = lc.tail_envelope(lsn, 2.0)
    # mu(x) = -x decreasing: sup over [2, inf) is at the left edge
    assert env.mu_bar(2.0) == pytest.approx(-2.0, abs=1e-12)
    assert env.lambda_bar(3.0) == pytest.approx(1.0, abs=1e-12)
    assert env.lambda_under(3.0) == pytest.approx(1.0, abs=1e-12)
    assert env.xi_bar.mean == pytest.approx(0.5, abs=1e-15)


def test_tail_envelope_needs_state_free_kernel(lsn):
    bad = dataclasses.replace(
        lsn, kernel=dataclasses.replace(lsn.kernel, state_dependent=True)
    )
    with pytest.raises(ModelError, match="state-dependent"):
        lc.tail_envelope(bad, 2.0)


def test_classify_lsn_scenario1(lsn):
    env = lc.tail_envelope(lsn, 2.0)
    rep = lc.classify_scenario(lsn, env)
    assert rep.scenario == "S1"
    # margin = E xi_bar + mu_bar/lambda_bar = 0.5 + (-2)/1
    assert rep.margin == pytest.approx(-1.5, abs=1e-12)


def test_classify_tanh_scenario3(tanh_model):
    rep = lc.classify_scenario(tanh_model, lc.tail_envelope(tanh_model, 2.0))
    assert rep.scenario == "S3"
    assert rep.margin == pytest.approx(0.5 - 1.0, abs=1e-12)


def test_classify_stress_scenario2(stress):
    rep = lc.classify_scenario(stress, lc.tail_envelope(stress, 1.0))
    assert rep.scenario == "S2"
    assert rep.margin < 0


def test_classify_updrift_scenario3(updrift):
    rep = lc.classify_scenario(updrift, lc.tail_envelope(updrift, 1.0))
    assert rep.scenario == "S3"
    # margin = E xi + mu/lambda = -1 + 1/2
    assert rep.margin == pytest.approx(-0.5, abs=1e-12)


def test_classify_none_when_margin_fails():
    # mu = 1, lambda = 1, -Exp(2) jumps: E xi + mu/lambda = -0.5 + 1 > 0
    m = lc.Model(
        drift=lc.Drift(fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       limit_pos=1.0, limit_neg=1.0),
        rate=lc.JumpRate(fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                         limit_pos=1.0, local_bound=lambda a, b: 1.0, constant=1.0),
        kernel=lc.exp_jump_kernel(2.0, sign=-1),
        working_interval=(-50.0, 50.0),
    )
    rep = lc.classify_scenario(m, lc.tail_envelope(m, 1.0))
    assert rep.scenario == "none"
    assert rep.details["S3"]["margin"] == pytest.approx(0.5, abs=1e-12)


# --- monotone transforms ------------------------------------------------------


def test_transform_identity_agrees_pointwise(lsn):
    g = lc.transform_model(lsn, lambda x: x, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                           lambda y: y, name="id")
    xs = np.linspace(0.1, 5.0, 40)
    assert np.allclose(g.drift(xs), lsn.drift(xs), atol=1e-14)
    assert np.allclose(g.rate(xs), lsn.rate(xs), atol=1e-14)
    assert np.allclose(g.closed_flow.state(xs, 0.7), lsn.closed_flow.state(xs, 0.7),
                       atol=1e-14)


def test_transform_linear_drift(lsn):
    # y = 2x: mu_g(y) = 2 mu(y/2) = 2 (-y/2) = -y
    g = lc.transform_model(lsn, lambda x: 2.0 * np.asarray(x, dtype=float),
                           lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
                           lambda y: 0.5 * np.asarray(y, dtype=float))
    ys = np.linspace(0.2, 8.0, 30)
    assert np.allclose(g.drift(ys), -ys, atol=1e-13)


def test_transform_exponential_jump_pushforward(lsn):
    # y = e^x maps an additive +Exp(2) jump from x=1 to e(e^Z - 1); the
    # transformed sampler must reproduce that law
    g = lc.transform_model(
        lsn, lambda x: np.exp(np.asarray(x, dtype=float)),
        lambda x: np.exp(np.asarray(x, dtype=float)),
        lambda y: np.log(np.asarray(y, dtype=float)),
    )
    rng = np.random.default_rng(47)
    y0 = math.e
    draws = np.array([g.kernel.sample(y0, rng) for _ in range(100_000)])

    def cdf(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, 1.0 - (1.0 + np.maximum(t, 0.0) / math.e) ** -2.0, 0.0)

    from levelcross import stats
    assert stats.ks_test(draws, cdf).pvalue > 0.01


def test_transform_rejects_decreasing_map(lsn):
    with pytest.raises(ModelError, match="g' > 0"):
        lc.transform_model(lsn, lambda x: -np.asarray(x, dtype=float),
                           lambda x: -np.ones_like(np.asarray(x, dtype=float)),
                           lambda y: -np.asarray(y, dtype=float))


def test_transform_rejects_wrong_inverse(lsn):
    with pytest.raises(ModelError, match="inverse"):
        lc.transform_model(lsn, lambda x: 2.0 * np.asarray(x, dtype=float),
                           lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
                           lambda y: np.asarray(y, dtype=float))
