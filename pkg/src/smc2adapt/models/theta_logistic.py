"""Theta-logistic population growth observed with Gaussian noise.

The latent log-population follows

    x_t = x_{t-1} + b0 + b1 * exp(b2 * x_{t-1}) + gamma * e_t,

with the time-1 state produced by one such step from the parameter x0.
Observations are y_t ~ Normal(a * x_t, sigma^2). The prior on x0 is
stated on the population scale, exp(x0) ~ HalfNormal(1000), and the
change of measure to x0 is part of the prior density.
"""

from __future__ import annotations

import math

import numpy as np

from ..transforms import ParamTransform
from .base import StateSpaceModel
from .priors import Exponential, LogHalfNormal, Normal

_LOG_2PI = math.log(2.0 * math.pi)


class ThetaLogistic(StateSpaceModel):
    name = "theta-logistic"
    param_names = ("b0", "b1", "b2", "x0", "gamma", "sigma", "a")
    dim_state = 1
    transform = ParamTransform(
        ("identity", "identity", "identity", "identity", "log", "log", "identity")
    )
    priors = (
        Normal(0.0, 1.0),
        Normal(0.0, 1.0),
        Normal(0.0, 1.0),
        LogHalfNormal(1000.0),
        Exponential(1.0),
        Exponential(1.0),
        Normal(1.0, 0.5),
    )
    default_theta = np.array([0.4, -0.06, 0.3, math.log(50.0), 0.1, 0.3, 1.0])

    @staticmethod
    def _step(theta, x, rng, n):
        b0, b1, b2, x0, gamma, sigma, a = theta
        # cap the growth exponent so an extreme prior draw cannot overflow
        growth = b1 * np.exp(np.minimum(b2 * x, 700.0))
        return x + b0 + growth + gamma * rng.standard_normal((n, 1))

    def sample_initial_state(self, theta, n, rng):
        x0 = theta[3]
        start = np.full((n, 1), x0)
        return self._step(theta, start, rng, n)

    def sample_transition(self, theta, x_prev, rng):
        return self._step(theta, x_prev, rng, x_prev.shape[0])

    def log_obs_density(self, theta, x, y_t):
        b0, b1, b2, x0, gamma, sigma, a = theta
        mean = a * x[:, 0]
        with np.errstate(invalid="ignore"):
            z = (y_t - mean) / sigma
            lp = -0.5 * (_LOG_2PI + z * z) - math.log(sigma)
        return np.where(np.isfinite(mean), lp, -np.inf)

    def sample_obs(self, theta, x, rng):
        b0, b1, b2, x0, gamma, sigma, a = theta
        return a * x[:, 0] + sigma * rng.standard_normal(x.shape[0])
