"""State-space model contract and dataset handling.

A model bundles a parameter prior, a simulable latent transition and an
observation density. Transitions only ever need to be sampled, never
evaluated, so models with intractable transition densities fit the same
interface. All state-facing methods are vectorised over particles:
states are arrays of shape (n, dim_state).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from .. import rngs
from ..transforms import ParamTransform


@dataclass(frozen=True)
class Dataset:
    """An observation sequence y_1, ..., y_T (scalar observations).

    T = 0 is permitted; annealing over an empty sequence reduces to prior
    sampling.
    """

    y: np.ndarray
    meta: str = ""

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ValueError("y must be a 1-D array")
        object.__setattr__(self, "y", y)

    @property
    def n_obs(self) -> int:
        return int(self.y.shape[0])


class StateSpaceModel(abc.ABC):
    """Interface shared by all models.

    Concrete models define ``name``, ``param_names``, ``dim_state``,
    ``transform`` (constrained <-> unconstrained bijection), ``priors``
    (one per parameter) and ``default_theta`` (a plausible generating
    value for synthetic data).
    """

    name: str
    param_names: tuple
    dim_state: int
    transform: ParamTransform
    priors: tuple
    default_theta: np.ndarray

    @property
    def dim_theta(self) -> int:
        return len(self.param_names)

    def log_prior(self, theta: np.ndarray) -> float:
        """Log prior density of a constrained parameter vector."""
        total = 0.0
        for prior, value in zip(self.priors, np.asarray(theta, dtype=float)):
            lp = prior.logpdf(float(value))
            if lp == -np.inf:
                return -np.inf
            total += lp
        return total

    def sample_prior(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one constrained parameter vector from the prior."""
        return np.array([prior.sample(rng) for prior in self.priors], dtype=float)

    @abc.abstractmethod
    def sample_initial_state(self, theta, n: int, rng) -> np.ndarray:
        """Draw n states from the time-1 state distribution, shape (n, dim_state)."""

    @abc.abstractmethod
    def sample_transition(self, theta, x_prev, rng) -> np.ndarray:
        """Advance states one step; x_prev and result have shape (n, dim_state)."""

    @abc.abstractmethod
    def log_obs_density(self, theta, x, y_t: float) -> np.ndarray:
        """Log observation density of scalar y_t at each state, shape (n,)."""

    @abc.abstractmethod
    def sample_obs(self, theta, x, rng) -> np.ndarray:
        """Draw one observation per state, shape (n,)."""


def log_prior_unconstrained(model: StateSpaceModel, phi: np.ndarray) -> float:
    """Log prior density on the unconstrained scale (Jacobian included)."""
    lp = model.log_prior(model.transform.to_constrained(phi))
    if lp == -np.inf:
        return -np.inf
    return lp + float(model.transform.log_jacobian(phi))


def simulate_dataset(model: StateSpaceModel, theta, n_obs: int, seed: int) -> Dataset:
    """Simulate one observation path of length n_obs from the model.

    The path is reproducible from (model, theta, n_obs, seed).
    """
    if n_obs < 1:
        raise ValueError("n_obs must be at least 1")
    theta = np.asarray(theta, dtype=float)
    rng = rngs.substream(seed, rngs.DATA)
    y = np.empty(n_obs, dtype=float)
    x = model.sample_initial_state(theta, 1, rng)
    y[0] = model.sample_obs(theta, x, rng)[0]
    for t in range(1, n_obs):
        x = model.sample_transition(theta, x, rng)
        y[t] = model.sample_obs(theta, x, rng)[0]
    return Dataset(y=y, meta=f"synthetic:{model.name}:seed={seed}")


def save_dataset(path, dataset: Dataset) -> None:
    """Write a dataset as CSV with header ``t,y`` and t = 1..T."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,y\n")
        for t, value in enumerate(dataset.y, start=1):
            fh.write(f"{t},{float(value)!r}\n")


def load_dataset(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if cols != ["t", "y"]:
            # multivariate observation columns (y2, ...) are not supported
            raise ValueError(f"expected dataset header 't,y', got {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append(float(parts[1]))
    return Dataset(y=np.asarray(rows), meta=str(path))
