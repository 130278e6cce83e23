"""Exact-likelihood oracle for the linear-Gaussian drift model."""

import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss
from scipy import stats

from smc2adapt.harness import kalman_loglik
from smc2adapt.models import BrownianMotion, simulate_dataset
from smc2adapt.rngs import substream


def quadrature_loglik_t3(theta, y):
    """log p(y_1:3) by probabilists' Gauss-Hermite cascade over the latents."""
    x0, beta, gamma, sigma = theta
    drift = beta - 0.5 * gamma * gamma
    nodes, weights = hermegauss(80)
    w = weights / math.sqrt(2.0 * math.pi)  # E[f(Z)] = sum w_i f(node_i)
    u1 = nodes[:, None, None]
    u2 = nodes[None, :, None]
    u3 = nodes[None, None, :]
    x1 = x0 + drift + gamma * u1
    x2 = x1 + drift + gamma * u2
    x3 = x2 + drift + gamma * u3
    dens = (
        stats.norm.pdf(y[0], loc=x1, scale=sigma)
        * stats.norm.pdf(y[1], loc=x2, scale=sigma)
        * stats.norm.pdf(y[2], loc=x3, scale=sigma)
    )
    total = np.einsum("i,j,k,ijk->", w, w, w, dens)
    return math.log(total)


def test_kalman_matches_quadrature():
    m = BrownianMotion()
    theta = m.default_theta
    y = simulate_dataset(m, theta, 3, 17).y
    assert kalman_loglik(theta, y) == pytest.approx(quadrature_loglik_t3(theta, y), abs=1e-6)


def test_kalman_matches_quadrature_other_theta():
    theta = np.array([0.5, 0.3, 0.8, 1.7])
    m = BrownianMotion()
    y = simulate_dataset(m, theta, 3, 18).y
    assert kalman_loglik(theta, y) == pytest.approx(quadrature_loglik_t3(theta, y), abs=1e-6)


def test_kalman_noise_free_latent_limit():
    # gamma -> 0: the latent path is deterministic, so the likelihood factorizes
    theta = np.array([1.0, 1.2, 1e-9, 0.7])
    y = np.array([2.0, 3.1, 4.6, 5.0])
    path = 1.0 + 1.2 * np.arange(1, 5)
    expected = stats.norm.logpdf(y, loc=path, scale=0.7).sum()
    assert kalman_loglik(theta, y) == pytest.approx(expected, rel=1e-9)


def test_kalman_t_end_prefix():
    m = BrownianMotion()
    y = simulate_dataset(m, m.default_theta, 10, 19).y
    assert kalman_loglik(m.default_theta, y, 4) == pytest.approx(
        kalman_loglik(m.default_theta, y[:4]), rel=1e-14
    )


def test_kalman_regression_value(bm_model, bm_data20):
    # frozen value for the shared T=20 dataset (seed 0, default theta)
    assert kalman_loglik(bm_model.default_theta, bm_data20.y) == pytest.approx(
        -38.69179008621991, abs=1e-9
    )


def test_pf_concentrates_at_large_nx(bm_model, bm_data20):
    from smc2adapt.filtering import run_filter

    theta = bm_model.default_theta
    exact = kalman_loglik(theta, bm_data20.y)
    for rep in range(3):
        out = run_filter(bm_model, theta, bm_data20.y, 20, 10_000, substream(4, 5, rep))
        assert abs(out.log_lik - exact) < 0.5
