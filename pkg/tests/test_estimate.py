"""Estimators against closed-form oracles and each other.

linear_shot_noise(1,1,2) has stationary density p(u) = 2 e^{-2u} on u > 0 and
crossing intensity nu(u) = 2u e^{-2u}; those anchor the external checks. The
internal ones pit the counting route against the occupation-time route and
the kernel-integral route on the same path.
"""
import dataclasses
import math

import numpy as np
import pytest

import levelcross as lc
from levelcross import stats
from levelcross.estimate import (
    CycleCountStats, GammaEstimate, IntensityEstimate, IntensityBundle,
    DensityEstimate,
)
from levelcross.model import JumpRate
from conftest import flat_traj, pure_flow_model, simulate_checked


@pytest.fixture(scope="module")
def lsn_part(lsn_run):
    return lc.cycle_partition(lsn_run, 0.5)


# --- cycle partition --------------------------------------------------------------


def test_partition_tiles_the_path(lsn_run, lsn_part):
    p = lsn_part
    assert p.piece_t0[0] == 0.0
    assert np.all(p.piece_dur >= 0)
    assert p.piece_dur.sum() == pytest.approx(lsn_run.horizon, rel=1e-12)
    assert np.array_equal(p.durations, np.diff(p.boundaries))
    assert p.span == pytest.approx(p.boundaries[-1] - p.boundaries[0], rel=1e-12)
    # cycle labels: 0 head, 1..n complete, n+1 tail; boundary pieces start
    # exactly on the base level
    assert p.piece_cycle[0] == 0
    assert p.piece_cycle[-1] == p.n_cycles + 1
    assert np.all(np.diff(p.piece_cycle) >= 0)
    on_boundary = np.isin(p.piece_t0, p.boundaries)
    assert np.all(p.piece_state[on_boundary] == 0.5)


def test_partition_needs_two_crossings(lsn):
    traj = lc.simulate(lsn, 1.0, lc.EventCount(3), 1)
    with pytest.raises(ValueError, match="at least 2 continuous crossings"):
        lc.cycle_partition(traj, 59.0)


def test_burn_in_is_the_first_boundary(lsn_run, lsn_part):
    assert lc.burn_in_time(lsn_run, 0.5) == lsn_part.boundaries[0]
    short = lc.simulate(lsn_run.model, 1.0, lc.EventCount(3), 1)
    with pytest.raises(ValueError, match="never crosses"):
        lc.burn_in_time(short, 59.0)


# --- occupation-time density ------------------------------------------------------


def test_single_segment_band_occupancy():
    # orbit 10 -> 5 at speed 1/2 spends time 2 in [6, 7]; total time 10
    m = pure_flow_model(-0.5)
    traj = flat_traj(m, 10.0, [], [], horizon=10.0, end_state=5.0)
    est = lc.estimate_density(traj, [6.5], h=0.5)
    assert est.values[0] == pytest.approx(0.2, abs=1e-9)


def test_density_matches_time_sampled_histogram(lsn_run):
    grid = np.array([0.25, 0.5, 0.75, 1.0])
    h = 0.05
    est = lc.estimate_density(lsn_run, grid, h, base=0.5)
    xs = lc.sample_states(lsn_run, 200_000, 0x0BA)
    for u, v, se in zip(grid, est.values, est.se):
        msk = (np.abs(xs - u) <= h).astype(float) / (2 * h)
        ref, ref_se = stats.block_estimate(msk)
        assert abs(v - ref) <= 3 * math.hypot(se, ref_se)
    # and the closed form, same tolerance
    for u, v, se in zip(grid, est.values, est.se):
        assert abs(v - 2 * math.exp(-2 * u)) <= 4 * se


def test_density_partition_tiling_sums_to_one(updrift):
    traj = simulate_checked(updrift, 0.0, lc.EventCount(20_000), 0x71E)
    lo, hi = updrift.working_interval
    h = 1.0
    centers = np.arange(lo + h, hi, 2 * h)
    est = lc.estimate_density(traj, centers, h)
    assert np.all(est.values >= 0)
    assert (2 * h) * est.values.sum() == pytest.approx(1.0, rel=1e-9)


def test_density_rejects_grid_near_drift_zero(lsn_run):
    with pytest.raises(ValueError, match="within h"):
        lc.estimate_density(lsn_run, [0.04, 0.5], h=0.05)


def test_density_bandwidth_guards(lsn_run):
    with pytest.raises(ValueError, match="bandwidth"):
        lc.estimate_density(lsn_run, [1.0], h=0.0)


def test_default_bandwidth_is_iqr_scaled(lsn_run):
    h = lc.default_bandwidth(lsn_run)
    xs = lc.sample_states(lsn_run, 10_000, 0xBA5E)
    q1, q3 = np.percentile(xs, [25, 75])
    assert h == pytest.approx(0.02 * (q3 - q1))
    flat = flat_traj(pure_flow_model(1.0), 5.0, [], [], horizon=0.0, end_state=5.0)
    with pytest.raises(ValueError, match="degenerate"):
        lc.default_bandwidth(flat)


def test_density_sensitivity_report(lsn_run, lsn_part):
    rep = lc.density_sensitivity(lsn_run, [1.0], 0.1, partition=lsn_part)
    assert rep["half"].h == 0.05
    assert rep["base"].h == 0.1
    assert rep["double"].h == 0.2
    # convex density: halving the band can only move the estimate by noise
    assert rep["half"].values[0] == pytest.approx(rep["base"].values[0], rel=0.05)


def test_density_csv(tmp_path, lsn_run, lsn_part):
    est = lc.estimate_density(lsn_run, [0.5, 1.0], 0.05, partition=lsn_part)
    p = tmp_path / "density.csv"
    est.to_csv(p)
    assert p.read_text().splitlines()[0] == "u,p_hat,stderr"
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1], est.values)


def test_sample_states_are_time_ordered(lsn_run):
    xs = lc.sample_states(lsn_run, 1000, 3)
    ys = lc.sample_states(lsn_run, 1000, 3)
    assert np.array_equal(xs, ys)
    assert xs.shape == (1000,)
    assert np.all(xs > 0)


# --- crossing intensities ---------------------------------------------------------


def test_intensity_is_count_over_time(lsn, lsn_run, lsn_part):
    # the defining identity, exact on both estimation routes
    for bundle in (
        lc.estimate_intensities(lsn_run, 1.0, partition=lsn_part),
        lc.estimate_intensities(lc.simulate(lsn, 1.0, lc.EventCount(2000), 9), 1.0),
    ):
        for est in bundle:
            assert est.value * est.time == pytest.approx(est.count, rel=1e-9, abs=1e-9)


def test_no_negative_jumps_means_no_down_jumps(lsn_run, lsn_part):
    for u in (0.5, 1.0, 2.0):
        bundle = lc.estimate_intensities(lsn_run, u, partition=lsn_part)
        assert bundle.nu_minus_d.value == 0.0
        assert bundle.nu_minus_d.count == 0
        # mu < 0 everywhere the path lives, so nu_+ is the jump route alone
        assert bundle.nu_plus.value == bundle.nu_plus_d.value


def test_base_intensity_times_mean_cycle_length_is_one(lsn_run, lsn_part):
    nu = lc.estimate_intensities(lsn_run, 0.5, partition=lsn_part).nu
    mean_len = lsn_part.span / lsn_part.n_cycles
    assert nu.value * mean_len == pytest.approx(1.0, rel=1e-12)


def test_intensity_matches_rice_value(lsn_run, lsn_part):
    # nu(1) = |mu(1)| p(1) = 2 e^{-2}
    nu = lc.estimate_intensities(lsn_run, 1.0, partition=lsn_part).nu
    assert abs(nu.value - 2 * math.exp(-2)) <= 3 * nu.se
    assert nu.se > 0


def test_intensities_reject_drift_zero(lsn_run):
    with pytest.raises(ValueError, match="zero of the drift"):
        lc.estimate_intensities(lsn_run, 0.0)


def test_pooling_is_concatenation(lsn):
    a = lc.estimate_intensities(lc.simulate(lsn, 1.0, lc.EventCount(4000), lc.RngConfig(1, 0)), 1.0)
    b = lc.estimate_intensities(lc.simulate(lsn, 1.0, lc.EventCount(4000), lc.RngConfig(1, 1)), 1.0)
    pooled = lc.pool_intensities([a.nu, b.nu])
    total_c = a.nu.count + b.nu.count
    total_t = a.nu.time + b.nu.time
    assert pooled.value == pytest.approx(total_c / total_t, rel=1e-12)
    assert pooled.count == total_c
    assert pooled.se > 0
    single = lc.pool_intensities([a.nu])
    assert single.value == a.nu.value
    with pytest.raises(ValueError, match="one kind at one level"):
        lc.pool_intensities([a.nu, b.nu_plus_d])
    with pytest.raises(ValueError, match="nothing to pool"):
        lc.pool_intensities([])


# --- Rice residuals ---------------------------------------------------------------


def _bundle(level, nu, dplus, dminus, se=1e-3):
    def est(kind, v):
        return IntensityEstimate(level=level, kind=kind, value=v, se=se,
                                 count=0, time=1.0)
    return IntensityBundle(level=level, nu=est("nu", nu),
                           nu_plus_d=est("nu_plus_d", dplus),
                           nu_minus_d=est("nu_minus_d", dminus),
                           nu_plus=est("nu_plus", dplus))


def test_rice_residual_zero_on_exact_inputs(lsn):
    # mu(1) = -1: nu = p and nu_{+,d} - nu_{-,d} = |mu| p
    p1 = 2 * math.exp(-2)
    density = DensityEstimate(grid=np.array([1.0]), h=0.05,
                              values=np.array([p1]), se=np.array([1e-3]),
                              base=0.5, total_time=100.0)
    rep = lc.rice_residual(density, [_bundle(1.0, nu=p1, dplus=p1, dminus=0.0)], lsn)
    assert rep.residual[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.balance_residual[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.rel_error[0] == pytest.approx(0.0, abs=1e-12)


def test_rice_residual_grid_mismatch(lsn):
    density = DensityEstimate(grid=np.array([1.0]), h=0.05,
                              values=np.array([0.3]), se=np.array([1e-3]),
                              base=0.5, total_time=100.0)
    with pytest.raises(ValueError, match="per grid point"):
        lc.rice_residual(density, [], lsn)
    with pytest.raises(ValueError, match="levels do not match"):
        lc.rice_residual(density, [_bundle(2.0, 0.3, 0.3, 0.0)], lsn)


def test_rice_holds_on_a_real_run(lsn_run, lsn_part):
    grid = np.array([0.25, 0.5, 1.0, 2.0])
    density = lc.estimate_density(lsn_run, grid, 0.05, partition=lsn_part)
    bundles = [lc.estimate_intensities(lsn_run, u, partition=lsn_part) for u in grid]
    rep = lc.rice_residual(density, bundles, lsn_run.model)
    assert rep.max_abs_residual() <= 3.0
    # Lemma 1 orientation: mu < 0, so the jump upcrossings carry |mu| p
    assert np.max(np.abs(rep.balance_residual)) <= 3.0
    assert np.all(rep.nu_hat > 0)


# --- integral-route intensities ---------------------------------------------------


def test_negative_kernel_never_fires_up(updrift):
    traj = simulate_checked(updrift, 0.0, lc.EventCount(5000), 0x11)
    xs = lc.sample_states(traj, 20_000, 4)
    up, down = lc.intensity_by_integral(updrift, xs, 1.0, 5)
    assert up.value == 0.0
    assert up.count == 0
    assert math.isnan(up.time)
    assert down.value > 0


def test_integral_route_agrees_with_counting(lsn_run, lsn_part):
    xs = lc.sample_states(lsn_run, 100_000, 0x1A)
    up, _ = lc.intensity_by_integral(lsn_run.model, xs, 1.0, 0x1B)
    cnt = lc.estimate_intensities(lsn_run, 1.0, partition=lsn_part).nu_plus_d
    assert abs(up.value - cnt.value) <= 3 * math.hypot(up.se, cnt.se)


def test_state_average_rate_matches_event_rate(stress):
    traj = simulate_checked(stress, 0.0, lc.EventCount(20_000), 0x5E)
    lam_pi, lam_se = lc.state_average_rate(stress, lc.sample_states(traj, 100_000, 6))
    block_counts, edges = np.histogram(traj.times, bins=100,
                                       range=(0.0, traj.horizon))
    block_rates = block_counts / np.diff(edges)
    rate = traj.n_jumps / traj.horizon
    rate_se = block_rates.std(ddof=1) / 10.0
    assert abs(lam_pi - rate) <= 3 * math.hypot(lam_se, rate_se)


# --- per-cycle count laws ---------------------------------------------------------


def test_cycle_count_stats_shapes(lsn_run):
    data = lc.cycle_counts(lsn_run, 0.5, (2.0,))
    st = lc.cycle_count_stats(data, 2.0)
    assert st.histogram.sum() == st.total_cycles == data.n_cycles
    assert st.mean == pytest.approx(data.targets[2.0].cont.mean())
    with pytest.raises(ValueError, match="unknown counter"):
        lc.cycle_count_stats(data, 2.0, which="down")


def _stats_from_hist(hist, base=0.5, level=2.0):
    hist = np.asarray(hist, dtype=np.int64)
    ks = np.arange(hist.size)
    n = int(hist.sum())
    mean = float((ks * hist).sum() / n) if n else 0.0
    return CycleCountStats(base=base, level=level, histogram=hist,
                           total_cycles=n, mean=mean)


def test_gamma_hat_closed_form():
    # counts {1,1,2} scaled by 10 to clear the sample-size gate: 1 - 30/40
    st = _stats_from_hist([0, 20, 10])
    g = lc.gamma_hat([st])
    assert g.gamma == pytest.approx(0.25)
    assert g.positive_cycles == 30
    assert g.se == pytest.approx(math.sqrt(0.25 * 0.75**2 / 30))
    # all ones: degenerate geometric
    g0 = lc.gamma_hat([_stats_from_hist([5, 40])])
    assert g0.gamma == 0.0
    assert g0.se == 0.0
    # pooling histograms equals pooling counts
    g2 = lc.gamma_hat([_stats_from_hist([0, 10, 5]), _stats_from_hist([0, 10, 5])])
    assert g2.gamma == pytest.approx(0.25)


def test_gamma_hat_guards():
    with pytest.raises(ValueError, match="no cycle statistics"):
        lc.gamma_hat([])
    with pytest.raises(ValueError, match="no cycles with a positive count"):
        lc.gamma_hat([_stats_from_hist([12])])
    with pytest.raises(ValueError, match="at least 30"):
        lc.gamma_hat([_stats_from_hist([0, 2, 1])])
    with pytest.raises(ValueError, match="mix bases"):
        lc.gamma_hat([_stats_from_hist([0, 20, 10], base=0.5),
                      _stats_from_hist([0, 20, 10], base=1.0)])


def test_gamma_hat_on_the_run(lsn_run):
    data = lc.cycle_counts(lsn_run, 0.5, (2.0,))
    g = lc.gamma_hat([lc.cycle_count_stats(data, 2.0)])
    assert 0.0 <= g.gamma <= 1.0
    assert g.positive_cycles >= 30
    assert g.se > 0


def test_zero_cycle_residual_exact():
    # 80 of 100 cycles empty, gamma = 0, nu ratio 0.2: prediction matches
    st = _stats_from_hist([80, 20])
    g = GammaEstimate(base=0.5, level=2.0, gamma=0.0, se=0.0, positive_cycles=20)
    nu_b = IntensityEstimate(level=0.5, kind="nu", value=1.0, se=1e-3,
                             count=100, time=100.0)
    nu_t = IntensityEstimate(level=2.0, kind="nu", value=0.2, se=2e-4,
                             count=20, time=100.0)
    assert lc.zero_cycle_residual(st, g, nu_b, nu_t) == pytest.approx(0.0, abs=1e-12)


def test_zero_cycle_law_holds_on_the_run(lsn_run, lsn_part):
    data = lc.cycle_counts(lsn_run, 0.5, (2.0,))
    st = lc.cycle_count_stats(data, 2.0)
    g = lc.gamma_hat([st])
    nu_b = lc.estimate_intensities(lsn_run, 0.5, partition=lsn_part).nu
    nu_t = lc.estimate_intensities(lsn_run, 2.0, partition=lsn_part).nu
    assert abs(lc.zero_cycle_residual(st, g, nu_b, nu_t)) <= 3.0


# --- stationarity equation --------------------------------------------------------


def test_smooth_bump_shape():
    tf = lc.smooth_bump(1.0, 0.5)
    xs = np.linspace(0.0, 2.0, 401)
    fp = tf.f_prime(xs)
    assert np.all(fp >= 0)
    assert fp[xs <= 0.5].max() == 0.0
    assert fp[xs >= 1.5].max() == 0.0
    assert tf.f_prime(np.array([1.0]))[0] == 1.0
    # C1 antiderivative, constant outside the support
    f = tf.f(xs)
    assert tf.f(np.array([0.2]))[0] == tf.f(np.array([0.0]))[0]
    assert tf.f(np.array([0.2]))[0] == pytest.approx(0.0, abs=1e-15)
    assert tf.f(np.array([1.8]))[0] == pytest.approx(0.5 * 16 / 15)
    num = np.gradient(f, xs)
    assert np.max(np.abs(num - fp)) < 1e-3
    assert np.all(np.diff(f) >= 0)


def test_stationarity_constant_f_is_exactly_zero(lsn_run):
    const = lc.estimate.TestFunction(
        name="const",
        f=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        f_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )
    res = lc.stationarity_residual(lsn_run, [const], n_states=5000)[0]
    assert res.lhs == 0.0
    assert res.rhs == 0.0
    assert res.residual == 0.0


def test_stationarity_zero_rate_collapses(lsn):
    # lambda == 0: after burn-in the mass sits at the attracting zero outside
    # supp f', so both sides vanish identically
    dead = JumpRate(fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                    limit_pos=0.0, local_bound=lambda lo, hi: 0.0)
    model = dataclasses.replace(lsn, rate=dead)
    traj = flat_traj(model, 2.0, [], [], horizon=2000.0, end_state=0.0)
    res = lc.stationarity_residual(traj, [lc.smooth_bump(1.0, 0.5)],
                                   n_states=20_000, burn=100.0)[0]
    assert res.lhs == 0.0
    assert res.rhs == 0.0
    assert res.residual == 0.0


def test_stationarity_holds_on_the_run(lsn_run):
    res = lc.stationarity_residual(lsn_run, [lc.smooth_bump(1.0, 0.5)],
                                   n_states=200_000)[0]
    assert abs(res.residual) <= 3.0
    assert res.se > 0
