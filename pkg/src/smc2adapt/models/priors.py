"""Per-parameter prior distributions.

Small closed-form densities used to compose model priors. Each prior
exposes ``logpdf`` on the parameter's natural scale and ``sample``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def logpdf(self, x: float) -> float:
        z = (x - self.mean) / self.sd
        return -0.5 * (_LOG_2PI + z * z) - math.log(self.sd)

    def sample(self, rng: np.random.Generator) -> float:
        return self.mean + self.sd * rng.standard_normal()


@dataclass(frozen=True)
class HalfNormal:
    """|Z| for Z ~ Normal(0, sd^2); support [0, inf)."""

    sd: float

    def logpdf(self, x: float) -> float:
        if x < 0.0:
            return -math.inf
        z = x / self.sd
        return math.log(2.0) - 0.5 * (_LOG_2PI + z * z) - math.log(self.sd)

    def sample(self, rng: np.random.Generator) -> float:
        return abs(self.sd * rng.standard_normal())


@dataclass(frozen=True)
class LogHalfNormal:
    """x with exp(x) ~ HalfNormal(sd); includes the change of measure.

    Used for a log-scale parameter whose prior is stated on the natural
    (exponentiated) scale: logpdf(x) = log HalfNormal(exp(x); sd) + x.
    """

    sd: float

    def logpdf(self, x: float) -> float:
        u = math.exp(x)
        z = u / self.sd
        return math.log(2.0) - 0.5 * (_LOG_2PI + z * z) - math.log(self.sd) + x

    def sample(self, rng: np.random.Generator) -> float:
        return math.log(abs(self.sd * rng.standard_normal()))


@dataclass(frozen=True)
class Exponential:
    rate: float

    def logpdf(self, x: float) -> float:
        if x < 0.0:
            return -math.inf
        return math.log(self.rate) - self.rate * x

    def sample(self, rng: np.random.Generator) -> float:
        return rng.exponential(1.0 / self.rate)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def logpdf(self, x: float) -> float:
        if self.lo <= x <= self.hi:
            return -math.log(self.hi - self.lo)
        return -math.inf

    def sample(self, rng: np.random.Generator) -> float:
        return rng.uniform(self.lo, self.hi)
