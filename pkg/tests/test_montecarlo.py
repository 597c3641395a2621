import math

import numpy as np
import pytest

from d2dmimo.montecarlo import (MonteCarloError, MonteCarloEstimate, laplace_xi1, laplace_xi3, run_chunks,
                                sample_d2d_powers, serving_gain, simulate_cue_se, simulate_d2d_se,
                                simulate_mean_powers)
from d2dmimo.params import db_to_ratio, default_params
from d2dmimo.power import avg_cue_power, d2d_power_cdf, mean_d2d_power
from d2dmimo.spectral import xi1, xi3

BASE = default_params()


def ks_statistic(samples, cdf):
    """Two-sided KS distance, using left limits so atoms are handled."""
    x = np.sort(samples)
    n = x.size
    f_right = cdf(x)
    f_left = cdf(np.nextafter(x, -np.inf))
    upper = np.arange(1, n + 1) / n - f_right
    lower = f_left - np.arange(n) / n
    return max(upper.max(), lower.max())


@pytest.mark.parametrize("ith_db", [-20.0, 0.0, 10.0])
def test_d2d_power_samples_ks(ith_db):
    p = BASE.replace(i_th=db_to_ratio(ith_db) * BASE.sigma2)
    n = 100_000
    x = sample_d2d_powers(p, n, seed=7)
    d = ks_statistic(x, lambda v: d2d_power_cdf(p, v))
    assert d < 1.6276 / math.sqrt(n)


def test_ks_detects_wrong_law():
    p = BASE.replace(i_th=BASE.sigma2)
    x = sample_d2d_powers(p, 100_000, seed=7) * 1.05
    assert ks_statistic(x, lambda v: d2d_power_cdf(p, v)) > 1.6276 / math.sqrt(x.size)


def test_serving_gain_moments():
    # Gamma(k, 1) has mean = variance = k; check both within 3 standard errors
    n = 100_000
    k = BASE.gamma_shape
    h = serving_gain(np.random.default_rng(17), BASE, n)
    assert abs(h.mean() - k) < 3 * math.sqrt(k / n)
    # var of the sample variance for Gamma(k): (mu4 - sigma^4)/n with mu4 = 3k^2 + 6k
    se_var = math.sqrt((3 * k * k + 6 * k - k * k) / n)
    assert abs(h.var(ddof=1) - k) < 3 * se_var


def test_far_field_term_removes_truncation_bias():
    # only interferers beyond 5 km, where the part past 10 km is about a third of the field
    from d2dmimo.montecarlo import _cue_interference, _far_field
    p = BASE.replace(region_radius=1e4)
    small = _cue_interference(np.random.default_rng(1), p, 5e3, 200, p.alpha_m)
    big = _cue_interference(np.random.default_rng(2), p.replace(region_radius=3e4), 5e3, 50, p.alpha_m)
    assert small.mean() == pytest.approx(big.mean(), rel=0.01)
    far = _far_field(p.s_users * p.lambda_m, np.array([avg_cue_power(p)]), 1e4, p.alpha_m)
    assert far > 0.2 * small.mean()


def test_thread_count_does_not_change_results():
    a = simulate_d2d_se(BASE, 1000, seed=3, workers=1)
    b = simulate_d2d_se(BASE, 1000, seed=3, workers=4)
    assert a == b


def test_chunk_streams_are_prefix_stable():
    kernel = lambda rng, m: rng.random(m)
    short = run_chunks(kernel, 400, seed=11)
    long = run_chunks(kernel, 1000, seed=11)
    assert np.array_equal(short, long[:400])
    assert not np.array_equal(run_chunks(kernel, 400, seed=12), short)
    assert np.array_equal(run_chunks(kernel, 400, seed=(11, 2)), run_chunks(kernel, 400, seed=(11, 2)))


def test_standard_error_shrinks_as_root_n():
    small = simulate_mean_powers(BASE, 20_000, seed=1)[0]
    large = simulate_mean_powers(BASE, 80_000, seed=2)[0]
    assert 0.4 < large.std_error / small.std_error < 0.6


def test_estimate_bookkeeping():
    e = MonteCarloEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]), seed=0)
    assert e.mean == 2.5
    assert e.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert e.ci95_low < e.mean < e.ci95_high
    assert e.agrees_with(2.6, rel=0.05)
    assert not e.agrees_with(10.0, rel=0.05)


def test_mean_powers_match_analysis():
    pc, pd = simulate_mean_powers(BASE, 200_000, seed=5)
    assert pc.agrees_with(avg_cue_power(BASE), rel=0.0, n_se=3)
    assert pd.agrees_with(mean_d2d_power(BASE), rel=0.0, n_se=3)


def test_laplace_xi3_matches_analysis():
    t = [1e11, 1e13, 1e15]
    for est, ti in zip(laplace_xi3(BASE, t, 20_000, seed=9), t):
        assert est.agrees_with(xi3(BASE, ti), rel=0.0, n_se=3)


def test_laplace_xi1_matches_analysis():
    # independent check of the exclusion-zone interference kernel
    p = BASE.replace(s_users=10)
    t = [1e12, 2e13]
    for est, ti in zip(laplace_xi1(p, t, 10_000, seed=4), t):
        assert est.agrees_with(xi1(p, ti), rel=0.0, n_se=3)


def test_argument_errors():
    with pytest.raises(MonteCarloError):
        simulate_d2d_se(BASE, 10)
    with pytest.raises(MonteCarloError):
        simulate_cue_se(BASE.replace(s_users=0), 200)
    with pytest.raises(MonteCarloError):
        simulate_d2d_se(BASE, 200, mode="bogus")


def test_full_network_mode_runs():
    p = BASE.replace(region_radius=1500.0)
    est = simulate_cue_se(p, 100, seed=1, mode="full-network")
    assert math.isfinite(est.mean) and est.mean > 0
    est = simulate_d2d_se(p, 100, seed=1, mode="full-network")
    assert math.isfinite(est.mean) and est.mean > 0
