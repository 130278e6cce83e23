"""Brownian motion with drift, observed through Gaussian noise.

Latent process: x_t = x_{t-1} + beta - gamma^2/2 + gamma * e_t, with the
time-1 state drawn the same way from the parameter x0. Observations are
y_t ~ Normal(x_t, sigma^2). The model is linear-Gaussian, so the exact
likelihood is available from a Kalman recursion, making it the main
testbed for estimator bias and posterior accuracy checks.
"""

from __future__ import annotations

import math

import numpy as np

from ..transforms import ParamTransform
from .base import StateSpaceModel
from .priors import HalfNormal, Normal

_LOG_2PI = math.log(2.0 * math.pi)


class BrownianMotion(StateSpaceModel):
    name = "bm"
    param_names = ("x0", "beta", "gamma", "sigma")
    dim_state = 1
    transform = ParamTransform(("identity", "identity", "log", "log"))
    priors = (Normal(3.0, 5.0), Normal(2.0, 5.0), HalfNormal(2.0), HalfNormal(2.0))
    default_theta = np.array([1.0, 1.2, 1.5, 1.0])

    @staticmethod
    def _drift(theta) -> float:
        x0, beta, gamma, sigma = theta
        return beta - 0.5 * gamma * gamma

    def sample_initial_state(self, theta, n, rng):
        x0, beta, gamma, sigma = theta
        x = x0 + self._drift(theta) + gamma * rng.standard_normal(n)
        return x[:, None]

    def sample_transition(self, theta, x_prev, rng):
        x0, beta, gamma, sigma = theta
        n = x_prev.shape[0]
        return x_prev + self._drift(theta) + gamma * rng.standard_normal((n, 1))

    def log_obs_density(self, theta, x, y_t):
        x0, beta, gamma, sigma = theta
        z = (y_t - x[:, 0]) / sigma
        return -0.5 * (_LOG_2PI + z * z) - math.log(sigma)

    def sample_obs(self, theta, x, rng):
        x0, beta, gamma, sigma = theta
        return x[:, 0] + sigma * rng.standard_normal(x.shape[0])
