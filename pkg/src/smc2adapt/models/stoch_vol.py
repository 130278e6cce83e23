"""One-factor stochastic volatility driven by a gamma Ornstein-Uhlenbeck process.

The instantaneous variance z_t follows an OU process driven by a compound
Poisson subordinator with exponential jumps, so its stationary law is
Gamma(shape=xi^2/omega2, rate=xi/omega2) with mean xi and variance omega2.
The integrated variance over (t-1, t],

    v_t = (z_{t-1} - z_t + sum_j e_j) / lam,

feeds the return distribution y_t ~ Normal(mu + beta * v_t, v_t). The
transition can only be simulated, not evaluated, which is exactly the
setting where a particle filter over (v_t, z_t) is needed.

State layout: x[:, 0] = v_t (integrated variance), x[:, 1] = z_t (spot
variance). Parameters theta = (xi, omega2, lam, beta, mu).
"""

from __future__ import annotations

import math

import numpy as np

from ..transforms import ParamTransform
from .base import StateSpaceModel
from .priors import Exponential, Normal

_LOG_2PI = math.log(2.0 * math.pi)


class StochasticVolatility(StateSpaceModel):
    name = "sv1f"
    param_names = ("xi", "omega2", "lam", "beta", "mu")
    dim_state = 2
    transform = ParamTransform(("log", "log", "log", "identity", "identity"))
    priors = (
        Exponential(0.2),
        Exponential(0.2),
        Exponential(1.0),
        Normal(0.0, math.sqrt(2.0)),
        Normal(0.0, math.sqrt(2.0)),
    )
    default_theta = np.array([4.0, 4.0, 0.5, 5.0, 0.0])

    def _stationary_spot(self, theta, n, rng):
        xi, omega2, lam, beta, mu = theta
        shape = xi * xi / omega2
        scale = omega2 / xi  # 1/rate
        return rng.gamma(shape, scale, size=n)

    def sample_initial_state(self, theta, n, rng):
        z0 = self._stationary_spot(theta, n, rng)
        x = np.empty((n, 2))
        x[:, 0] = 0.0
        x[:, 1] = z0
        return self.sample_transition(theta, x, rng)

    # expected jumps per transition beyond which the compound Poisson
    # aggregates come from a moment-matched bivariate normal: the per-jump
    # simulation is memory-unbounded under wild parameter proposals, while
    # at thousands of jumps the normal approximation error sits far below
    # the filter's own Monte Carlo noise
    _JUMP_CLT_MEAN = 3000.0

    def sample_transition(self, theta, x_prev, rng):
        xi, omega2, lam, beta, mu = theta
        n = x_prev.shape[0]
        z_prev = x_prev[:, 1]
        rate = xi / omega2
        m = lam * xi * xi / omega2
        if m <= self._JUMP_CLT_MEAN:
            k = rng.poisson(m, size=n)
            total = int(k.sum())
            # one flat draw for all particles' jumps; segment sums by particle
            u = rng.random(total)
            jumps = rng.exponential(1.0 / rate, size=total)
            owner = np.repeat(np.arange(n), k)
            decayed = np.bincount(owner, weights=np.exp(-lam * (1.0 - u)) * jumps, minlength=n)
            jump_sum = np.bincount(owner, weights=jumps, minlength=n)
        elif math.isfinite(m) and math.isfinite(lam) and 0.0 < rate < math.inf:
            # sum of jumps and sum of decayed jumps, jointly normal with the
            # exact compound Poisson first and second moments
            s = 1.0 / rate
            a1 = -math.expm1(-lam) / lam
            a2 = -math.expm1(-2.0 * lam) / (2.0 * lam)
            root = s * math.sqrt(2.0 * m)
            z2 = rng.standard_normal((2, n))
            jump_sum = m * s + root * z2[0]
            decayed = m * s * a1 + root * (a1 * z2[0] + math.sqrt(max(a2 - a1 * a1, 0.0)) * z2[1])
            jump_sum = np.maximum(jump_sum, 0.0)
            decayed = np.clip(decayed, 0.0, jump_sum)
        else:
            # a proposal so extreme the moments overflow; keep the state
            # finite so the weights stay well defined and the move dies
            # through the density ratio instead of a crash
            jump_sum = np.full(n, 1e12)
            decayed = np.zeros(n)
        z = math.exp(-lam) * z_prev + decayed
        v = (z_prev - z + jump_sum) / lam
        out = np.empty((n, 2))
        out[:, 0] = v
        out[:, 1] = z
        return out

    def log_obs_density(self, theta, x, y_t):
        xi, omega2, lam, beta, mu = theta
        v = x[:, 0]
        # overflow saturates z*z to inf, which correctly maps to -inf below
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            z = (y_t - mu - beta * v) / np.sqrt(v)
            lp = -0.5 * (_LOG_2PI + z * z) - 0.5 * np.log(v)
        return np.where(v > 0.0, lp, -np.inf)

    def sample_obs(self, theta, x, rng):
        xi, omega2, lam, beta, mu = theta
        v = x[:, 0]
        return mu + beta * v + np.sqrt(v) * rng.standard_normal(x.shape[0])
