"""Bootstrap filter, weights, ESS and resampling."""

import math

import numpy as np
import pytest
from scipy import stats

from smc2adapt.filtering import (
    StateCloud,
    ess,
    extend_filter,
    multinomial_resample,
    normalize_log_weights,
    run_filter,
)
from smc2adapt.harness import kalman_loglik
from smc2adapt.models import Ricker
from smc2adapt.rngs import substream


# ---------------------------------------------------------------- ess / weights


def test_ess_examples():
    assert ess(np.full(1000, 1e-3)) == pytest.approx(1000.0)
    assert ess(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(2.0)
    assert ess(np.array([0.5, 0.25, 0.25])) == pytest.approx(1.0 / 0.375)


def test_normalize_log_weights():
    lw = normalize_log_weights(np.array([0.0, math.log(4.0)]))
    np.testing.assert_allclose(np.exp(lw), [0.2, 0.8], rtol=1e-12)
    with pytest.raises(RuntimeError, match="zero weight"):
        normalize_log_weights(np.array([-np.inf, -np.inf]))


def test_normalize_handles_large_magnitudes():
    lw = normalize_log_weights(np.array([-700.0, -700.0, -700.0 + math.log(2.0)]))
    np.testing.assert_allclose(np.exp(lw), [0.25, 0.25, 0.5], rtol=1e-12)


# ---------------------------------------------------------------- resampling


def test_resample_point_mass():
    rng = np.random.default_rng(0)
    idx = multinomial_resample(np.array([1.0, 0.0, 0.0]), 50, rng)
    assert np.all(idx == 0)


def test_resample_uniform_chi_square():
    rng = np.random.default_rng(1)
    n_cat, draws = 10, 100_000
    idx = multinomial_resample(np.full(n_cat, 0.1), draws, rng)
    counts = np.bincount(idx, minlength=n_cat)
    stat = ((counts - draws / n_cat) ** 2 / (draws / n_cat)).sum()
    assert stat < stats.chi2.ppf(0.999, df=n_cat - 1)


def test_resample_matches_weights_within_3se():
    rng = np.random.default_rng(2)
    w = np.array([0.5, 0.3, 0.15, 0.05])
    draws = 100_000
    counts = np.bincount(multinomial_resample(w, draws, rng), minlength=4)
    freqs = counts / draws
    se = np.sqrt(w * (1 - w) / draws)
    assert np.all(np.abs(freqs - w) < 3 * se)


def test_resample_n_out_differs():
    rng = np.random.default_rng(3)
    idx = multinomial_resample(np.array([0.25, 0.75]), 7, rng)
    assert idx.shape == (7,)
    assert set(idx) <= {0, 1}


# ---------------------------------------------------------------- filter mechanics


def test_empty_cloud():
    cloud = StateCloud.empty(8, 2)
    assert cloud.nx == 8
    assert cloud.t == 0
    assert not cloud.degenerate
    assert cloud.log_lik == 0.0
    np.testing.assert_allclose(cloud.norm_weights.sum(), 1.0)


def test_single_particle_filter_is_plain_simulation(bm_model, bm_data20):
    # with nx=1 the estimate telescopes to sum_t log g(y_t | x_t) along one path
    theta = bm_model.default_theta
    y = bm_data20.y
    out = run_filter(bm_model, theta, y, 10, 1, substream(99, 5))
    rng = substream(99, 5)
    x = bm_model.sample_initial_state(theta, 1, rng)
    total = bm_model.log_obs_density(theta, x, y[0])[0]
    for t in range(1, 10):
        x = bm_model.sample_transition(theta, x, rng)
        total += bm_model.log_obs_density(theta, x, y[t])[0]
    assert out.log_lik == total
    assert out.ll_count == 10


def test_run_filter_equals_repeated_extend(bm_model, bm_data20):
    theta = bm_model.default_theta
    y = bm_data20.y
    full = run_filter(bm_model, theta, y, 20, 30, substream(7, 1))
    rng = substream(7, 1)
    cloud = StateCloud.empty(30, bm_model.dim_state)
    for t in range(20):
        cloud, _ = extend_filter(cloud, bm_model, theta, y[t], rng)
    assert cloud.log_lik == full.log_lik
    np.testing.assert_array_equal(cloud.particles, full.cloud.particles)
    np.testing.assert_array_equal(cloud.norm_weights, full.cloud.norm_weights)


def test_constant_model_loglik_and_cost(const_model):
    theta = np.array([-0.5])
    y = np.zeros(12)
    out = run_filter(const_model, theta, y, 12, 40, substream(0, 4))
    assert out.log_lik == pytest.approx(12 * -0.5, rel=1e-14)
    assert out.ll_count == 12 * 40
    assert ess(out.cloud.norm_weights) == pytest.approx(40.0)


def test_degenerate_propagation():
    # a negative count has zero probability under any rate: the cloud dies there
    model = Ricker()
    theta = model.default_theta
    y = np.array([5.0, -1.0, 4.0])
    out = run_filter(model, theta, y, 3, 25, substream(1, 0))
    assert out.log_lik == -np.inf
    assert out.cloud.degenerate
    assert out.cloud.t == 3
    assert out.ll_count == 2 * 25  # the third step short-circuits


def test_extend_degenerate_keeps_degenerate(const_model):
    dead = StateCloud(np.zeros((5, 1)), np.full(5, 0.2), -np.inf, 3)
    cloud, incr = extend_filter(dead, const_model, np.array([0.0]), 1.0, substream(2, 0))
    assert incr == -np.inf
    assert cloud.degenerate
    assert cloud.t == 4


def test_deep_negative_log_densities_stable(const_model):
    theta = np.array([-700.0])
    out = run_filter(const_model, theta, np.zeros(5), 5, 10, substream(3, 0))
    assert out.log_lik == pytest.approx(-3500.0)
    assert np.all(np.isfinite(out.cloud.norm_weights))


def test_run_filter_validates_args(bm_model, bm_data20):
    with pytest.raises(ValueError, match="nx"):
        run_filter(bm_model, bm_model.default_theta, bm_data20.y, 5, 0, substream(0, 0))
    with pytest.raises(ValueError, match="t_end"):
        run_filter(bm_model, bm_model.default_theta, bm_data20.y, 21, 5, substream(0, 0))


def test_weights_normalized_every_step(bm_model, bm_data20):
    theta = bm_model.default_theta
    rng = substream(11, 3)
    cloud = StateCloud.empty(16, 1)
    for t in range(20):
        cloud, _ = extend_filter(cloud, bm_model, theta, bm_data20.y[t], rng)
        assert abs(cloud.norm_weights.sum() - 1.0) < 1e-10


# ---------------------------------------------------------------- estimator quality


def test_one_step_increment_unbiased(bm_model, bm_data20):
    # mean of one-step likelihood estimates matches the Kalman predictive
    theta = bm_model.default_theta
    y = bm_data20.y
    exact = kalman_loglik(theta, y, 1)
    m = 10_000
    ratios = np.empty(m)
    for i in range(m):
        out = run_filter(bm_model, theta, y, 1, 50, substream(1000, 5, i))
        ratios[i] = math.exp(out.log_lik - exact)
    se = ratios.std(ddof=1) / math.sqrt(m)
    assert abs(ratios.mean() - 1.0) < 3 * se
