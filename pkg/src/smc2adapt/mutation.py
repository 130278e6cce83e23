"""Particle-marginal Metropolis-Hastings moves for parameter particles.

Each parameter particle carries a state cloud whose likelihood estimate
stands in for the intractable likelihood. A move proposes a new parameter
from a random-walk Gaussian, runs a fresh filter there, and accepts with
the exact-approximate ratio; on acceptance the particle adopts the
proposed parameter together with its freshly filtered cloud.

Jump distances are measured in the Mahalanobis metric of the ensemble
covariance so that expected squared jumping distance (ESJD) is comparable
across stages and models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filtering import PfOutput, StateCloud, run_filter
from .models.base import StateSpaceModel, log_prior_unconstrained


@dataclass
class ThetaParticle:
    """One parameter particle: unconstrained value plus its state cloud."""

    phi: np.ndarray
    cloud: StateCloud

    @property
    def log_lik(self) -> float:
        return self.cloud.log_lik

    def copy(self) -> "ThetaParticle":
        return ThetaParticle(self.phi.copy(), self.cloud.copy())


@dataclass(frozen=True)
class ProposalSpec:
    """Frozen random-walk proposal: scale * cov, with derived factors.

    ``cov`` is the (jittered, positive-definite) ensemble covariance on
    the unconstrained scale; ``cov_inv`` defines the Mahalanobis metric
    for ESJD; ``chol`` is the Cholesky factor of scale * cov used to draw
    proposals.
    """

    cov: np.ndarray
    scale: float
    chol: np.ndarray
    cov_inv: np.ndarray


@dataclass(frozen=True)
class MutationReport:
    """Outcome of one mutation sweep over the ensemble."""

    accepted: int
    proposed: int
    esjd: float  # mean over particles of alpha * squared Mahalanobis jump
    ll_count: int


def make_proposal(cov: np.ndarray, scale: float) -> ProposalSpec:
    """Build a ProposalSpec, jittering the covariance if it is not PD.

    A collapsed ensemble can produce a covariance whose Cholesky pivots
    are barely positive while LU elimination still hits an exact zero, so
    the inverse must sit under the same guard as the factorisation.
    """
    cov = 0.5 * (cov + cov.T)
    try:
        chol = np.linalg.cholesky(scale * cov)
        cov_inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError:
        cov = cov + 1e-9 * np.eye(cov.shape[0])
        chol = np.linalg.cholesky(scale * cov)
        cov_inv = np.linalg.inv(cov)
    return ProposalSpec(cov=cov, scale=scale, chol=chol, cov_inv=cov_inv)


def default_proposal(phis: np.ndarray, weights: np.ndarray | None = None) -> ProposalSpec:
    """Random-walk proposal from the weighted ensemble covariance.

    Uses the standard optimal-scaling factor 2.38^2 / dim on the
    covariance of the current particles (unconstrained scale).
    """
    phis = np.asarray(phis, dtype=float)
    n, dim = phis.shape
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
    mean = w @ phis
    centred = phis - mean
    cov = (centred * w[:, None]).T @ centred
    return make_proposal(cov, 2.38**2 / dim)


def esjd_increment(phi: np.ndarray, phi_star: np.ndarray, alpha: float, cov_inv: np.ndarray) -> float:
    """Contribution of one proposal to the ESJD estimate: alpha * jump^2."""
    delta = np.asarray(phi_star, dtype=float) - np.asarray(phi, dtype=float)
    return float(delta @ cov_inv @ delta) * alpha


def _log_target(ll: float, prior: float, temper: float, ref: float | None) -> float:
    """Log density of the (possibly tempered) parameter target.

    Plain runs target prior * likelihood^temper; runs restarted from a
    reference distribution target ref^(1-temper) * (prior*likelihood)^temper.
    """
    if ref is None:
        if prior == -np.inf:
            return -np.inf
        if temper == 0.0:
            return prior
        if ll == -np.inf:
            return -np.inf
        return prior + temper * ll
    if temper == 0.0:
        return ref
    if prior == -np.inf or ll == -np.inf:
        return -np.inf
    return (1.0 - temper) * ref + temper * (prior + ll)


def log_accept_ratio(
    ll_cur: float,
    ll_prop: float,
    prior_cur: float,
    prior_prop: float,
    temper: float = 1.0,
    ref_cur: float | None = None,
    ref_prop: float | None = None,
) -> float:
    """Log acceptance ratio of a symmetric-proposal move.

    Swapping the roles of current and proposed values negates the result.
    A zero-mass proposed target gives -inf; a zero-mass current target
    with a positive-mass proposal gives +inf (certain acceptance).
    """
    cur = _log_target(ll_cur, prior_cur, temper, ref_cur)
    prop = _log_target(ll_prop, prior_prop, temper, ref_prop)
    if prop == -np.inf:
        return -np.inf
    if cur == -np.inf:
        return np.inf
    return prop - cur


def pmmh_step(
    particle: ThetaParticle,
    model: StateSpaceModel,
    y: np.ndarray,
    t_end: int,
    temper: float,
    proposal: ProposalSpec,
    nx: int,
    rng: np.random.Generator,
    ref_log_density=None,
):
    """One exact-approximate MH update of a parameter particle.

    Proposes phi* = phi + L z, runs a fresh nx-particle filter over
    y[0:t_end] at phi* (skipped when the proposed target is already
    zero), and accepts with probability alpha. Returns
    ``(particle, accepted, mahal_sq, alpha, ll_count)`` where mahal_sq is
    the squared Mahalanobis jump in the ensemble metric and ll_count the
    number of observation-density evaluations spent.
    """
    phi = particle.phi
    z = rng.standard_normal(phi.shape[0])
    phi_star = phi + proposal.chol @ z
    delta = phi_star - phi
    mahal_sq = float(delta @ proposal.cov_inv @ delta)

    prior_cur = log_prior_unconstrained(model, phi)
    prior_prop = log_prior_unconstrained(model, phi_star)
    ref_cur = ref_prop = None
    if ref_log_density is not None:
        ref_cur = float(ref_log_density(phi))
        ref_prop = float(ref_log_density(phi_star))

    # skip the filter when the proposed target is zero whatever the likelihood
    if prior_prop == -np.inf and (ref_log_density is None or temper > 0.0):
        return particle, False, mahal_sq, 0.0, 0

    out: PfOutput = run_filter(model, model.transform.to_constrained(phi_star), y, t_end, nx, rng)
    if out.log_lik == -np.inf:
        return particle, False, mahal_sq, 0.0, out.ll_count

    log_ratio = log_accept_ratio(
        particle.log_lik, out.log_lik, prior_cur, prior_prop, temper, ref_cur, ref_prop
    )
    alpha = math.exp(min(0.0, log_ratio))
    if rng.random() < alpha:
        return ThetaParticle(phi_star, out.cloud), True, mahal_sq, alpha, out.ll_count
    return particle, False, mahal_sq, alpha, out.ll_count


def pmmh_sweep(
    particles: list,
    model: StateSpaceModel,
    y: np.ndarray,
    t_end: int,
    temper: float,
    proposal: ProposalSpec,
    nx: int,
    rng_for: callable,
    ref_log_density=None,
) -> MutationReport:
    """Apply one PMMH update to every particle in place.

    ``rng_for(n)`` supplies the generator for particle n, keeping the
    sweep replayable and order-independent.
    """
    accepted = 0
    esjd_sum = 0.0
    ll_count = 0
    for n, particle in enumerate(particles):
        new, acc, mahal_sq, alpha, evals = pmmh_step(
            particle, model, y, t_end, temper, proposal, nx, rng_for(n), ref_log_density
        )
        particles[n] = new
        accepted += int(acc)
        esjd_sum += mahal_sq * alpha
        ll_count += evals
    n_total = len(particles)
    return MutationReport(
        accepted=accepted, proposed=n_total, esjd=esjd_sum / n_total, ll_count=ll_count
    )
