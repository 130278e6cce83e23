"""Bijections between constrained parameter vectors and R^d.

Samplers operate on an unconstrained scale: positive parameters are
log-transformed and interval-bounded parameters are logit-transformed.
Each transform carries the log-Jacobian needed to move prior densities
to the unconstrained scale.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

IDENTITY = "identity"
LOG = "log"
LOGIT = "logit"


class ParamTransform:
    """Per-coordinate bijection for a parameter vector.

    Parameters
    ----------
    tags : sequence
        One tag per parameter: ``"identity"``, ``"log"`` or
        ``("logit", lo, hi)`` for a parameter supported on (lo, hi).
    """

    def __init__(self, tags):
        parsed = []
        for tag in tags:
            if tag == IDENTITY or tag == LOG:
                parsed.append((tag, None, None))
            elif isinstance(tag, (tuple, list)) and len(tag) == 3 and tag[0] == LOGIT:
                lo, hi = float(tag[1]), float(tag[2])
                if not lo < hi:
                    raise ValueError(f"logit bounds must satisfy lo < hi, got ({lo}, {hi})")
                parsed.append((LOGIT, lo, hi))
            else:
                raise ValueError(f"unknown transform tag: {tag!r}")
        self.tags = tuple(parsed)
        self.dim = len(parsed)

    def to_unconstrained(self, theta: np.ndarray) -> np.ndarray:
        """Map constrained theta (support interior) to R^d."""
        theta = np.asarray(theta, dtype=float)
        phi = np.array(theta, dtype=float, copy=True)
        for j, (kind, lo, hi) in enumerate(self.tags):
            if kind == LOG:
                phi[..., j] = np.log(theta[..., j])
            elif kind == LOGIT:
                u = (theta[..., j] - lo) / (hi - lo)
                phi[..., j] = np.log(u) - np.log1p(-u)
        return phi

    def to_constrained(self, phi: np.ndarray) -> np.ndarray:
        """Map unconstrained phi back to the parameter's natural scale."""
        phi = np.asarray(phi, dtype=float)
        theta = np.array(phi, dtype=float, copy=True)
        for j, (kind, lo, hi) in enumerate(self.tags):
            if kind == LOG:
                theta[..., j] = np.exp(phi[..., j])
            elif kind == LOGIT:
                theta[..., j] = lo + (hi - lo) * expit(phi[..., j])
        return theta

    def log_jacobian(self, phi: np.ndarray) -> np.ndarray:
        """log |d theta / d phi| summed over coordinates.

        Adding this to a constrained-scale log prior density evaluated at
        ``to_constrained(phi)`` gives the density on the unconstrained scale.
        Supports batched input; returns a scalar for a single vector.
        """
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(phi.shape[:-1], dtype=float)
        for j, (kind, lo, hi) in enumerate(self.tags):
            if kind == LOG:
                out = out + phi[..., j]
            elif kind == LOGIT:
                # d theta/d phi = (hi-lo) * expit(phi) * expit(-phi)
                p = phi[..., j]
                out = out + np.log(hi - lo) + log_expit(p) + log_expit(-p)
        return out if out.ndim else float(out)
