"""Bootstrap particle filtering with adaptive resampling.

The filter propagates a cloud of state particles through the model's
transition kernel and weights them by the observation density, resampling
multinomially whenever the effective sample size drops below half the
cloud size. The running likelihood estimate uses the weighted incremental
form

    p_hat(y_t | y_{1:t-1}) = sum_m W_{t-1}^m g(y_t | x_t^m),

which keeps the overall estimate of p(y_{1:t}) unbiased under conditional
resampling (and reduces to the plain average when every step resamples).
All weight arithmetic is done in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models.base import StateSpaceModel


def _logsumexp(a: np.ndarray) -> float:
    """log(sum(exp(a))) that tolerates -inf entries (returns -inf if all are)."""
    m = a.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.exp(a - m).sum()))


def ess(weights: np.ndarray) -> float:
    """Effective sample size 1 / sum(W^2) of normalised weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """Shift log weights so they sum to one in probability space."""
    z = _logsumexp(np.asarray(log_weights, dtype=float))
    if z == -np.inf:
        raise RuntimeError("all particles have zero weight")
    return log_weights - z


def multinomial_resample(weights: np.ndarray, n_out: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n_out ancestor indices i.i.d. from the weight distribution."""
    cdf = np.cumsum(np.asarray(weights, dtype=float))
    cdf[-1] = 1.0  # guard against cumulative rounding
    return np.searchsorted(cdf, rng.random(n_out)).astype(np.int64)


@dataclass
class StateCloud:
    """A weighted state-particle cloud after assimilating t observations.

    ``log_lik`` is the running estimate of log p(y_{1:t} | theta); it is
    -inf (and the cloud is degenerate) if every particle hit zero
    observation density at some step. A cloud with t=0 holds placeholder
    particles and represents a filter that has not started yet.
    """

    particles: np.ndarray  # (nx, dim_state)
    norm_weights: np.ndarray  # (nx,), sums to 1
    log_lik: float
    t: int

    @classmethod
    def empty(cls, nx: int, dim_state: int) -> "StateCloud":
        return cls(
            particles=np.zeros((nx, dim_state)),
            norm_weights=np.full(nx, 1.0 / nx),
            log_lik=0.0,
            t=0,
        )

    @property
    def nx(self) -> int:
        return int(self.particles.shape[0])

    @property
    def degenerate(self) -> bool:
        return self.log_lik == -np.inf

    def copy(self) -> "StateCloud":
        return StateCloud(self.particles.copy(), self.norm_weights.copy(), self.log_lik, self.t)


@dataclass(frozen=True)
class PfOutput:
    """Result of a filter run: final cloud, log-likelihood estimate and cost.

    ``ll_count`` is the number of observation-density evaluations
    performed (nx per assimilated observation).
    """

    cloud: StateCloud
    log_lik: float
    ll_count: int


def extend_filter(
    cloud: StateCloud,
    model: StateSpaceModel,
    theta: np.ndarray,
    y_next: float,
    rng: np.random.Generator,
):
    """Assimilate one more observation into a cloud.

    Returns ``(new_cloud, log_incr)`` where log_incr estimates
    log p(y_{t+1} | y_{1:t}, theta). Extending a degenerate cloud keeps it
    degenerate with a -inf increment and performs no model evaluations.
    """
    nx = cloud.nx
    if cloud.degenerate:
        return StateCloud(cloud.particles, np.full(nx, 1.0 / nx), -np.inf, cloud.t + 1), -np.inf

    if cloud.t == 0:
        x = model.sample_initial_state(theta, nx, rng)
        log_w = np.full(nx, -math.log(nx))
    else:
        w = cloud.norm_weights
        if ess(w) < nx / 2.0:
            idx = multinomial_resample(w, nx, rng)
            x_prev = cloud.particles[idx]
            log_w = np.full(nx, -math.log(nx))
        else:
            x_prev = cloud.particles
            with np.errstate(divide="ignore"):
                log_w = np.log(w)
        x = model.sample_transition(theta, x_prev, rng)

    log_g = model.log_obs_density(theta, x, y_next)
    joint = log_w + log_g
    incr = _logsumexp(joint)
    if incr == -np.inf:
        return StateCloud(x, np.full(nx, 1.0 / nx), -np.inf, cloud.t + 1), -np.inf
    w_new = np.exp(joint - incr)
    w_new /= w_new.sum()
    return StateCloud(x, w_new, cloud.log_lik + incr, cloud.t + 1), float(incr)


def run_filter(
    model: StateSpaceModel,
    theta: np.ndarray,
    y: np.ndarray,
    t_end: int,
    nx: int,
    rng: np.random.Generator,
) -> PfOutput:
    """Run a bootstrap filter over y[0:t_end] with nx state particles.

    Equivalent to t_end calls of :func:`extend_filter` on the same RNG
    stream, so partial runs can be extended bit-identically.
    """
    if nx < 1:
        raise ValueError("nx must be at least 1")
    if not 1 <= t_end <= len(y):
        raise ValueError(f"t_end must be in [1, {len(y)}], got {t_end}")
    cloud = StateCloud.empty(nx, model.dim_state)
    evals = 0
    for t in range(t_end):
        if not cloud.degenerate:
            evals += nx
        cloud, _ = extend_filter(cloud, model, theta, y[t], rng)
    return PfOutput(cloud=cloud, log_lik=cloud.log_lik, ll_count=evals)
