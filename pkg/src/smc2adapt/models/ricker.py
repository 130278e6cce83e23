"""Noisy Ricker map with Poisson observations.

Population dynamics x_{t+1} = r * x_t * exp(-x_t + z_{t+1}) with
z ~ Normal(0, sigma^2), started from x_0 = 1 (one noisy step produces
the time-1 state). Counts are observed as y_t ~ Poisson(phi * x_t).
The parameters are worked with directly on the log scale,
theta = (log phi, log r, log sigma), with uniform priors on that scale,
so the unconstrained transform is the identity.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, xlogy

from ..transforms import ParamTransform
from .base import StateSpaceModel
from .priors import Uniform


class Ricker(StateSpaceModel):
    name = "ricker"
    param_names = ("log_phi", "log_r", "log_sigma")
    dim_state = 1
    transform = ParamTransform(("identity", "identity", "identity"))
    priors = (Uniform(1.61, 3.0), Uniform(2.0, 5.0), Uniform(-1.8, 1.0))
    default_theta = np.array([math.log(10.0), math.log(44.7), math.log(0.6)])

    @staticmethod
    def _step(theta, x, rng, n):
        log_phi, log_r, log_sigma = theta
        z = math.exp(log_sigma) * rng.standard_normal((n, 1))
        return math.exp(log_r) * x * np.exp(-x + z)

    def sample_initial_state(self, theta, n, rng):
        return self._step(theta, np.ones((n, 1)), rng, n)

    def sample_transition(self, theta, x_prev, rng):
        return self._step(theta, x_prev, rng, x_prev.shape[0])

    def log_obs_density(self, theta, x, y_t):
        log_phi = theta[0]
        rate = math.exp(log_phi) * x[:, 0]
        y = float(y_t)
        if y < 0.0 or y != round(y):
            return np.full(x.shape[0], -np.inf)
        with np.errstate(divide="ignore"):
            lp = xlogy(y, rate) - rate - gammaln(y + 1.0)
        return lp

    def sample_obs(self, theta, x, rng):
        log_phi = theta[0]
        return rng.poisson(math.exp(log_phi) * x[:, 0]).astype(float)
