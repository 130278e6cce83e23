"""Adapting the number of state particles during an SMC^2 run.

Adaptation runs in three stages at each resample-move step:

1. Trigger: adapt when the previous step's expected squared jumping
   distance (ESJD) fell short of the target, or (for strategies that can
   safely shrink) overshot it by more than a factor.
2. Candidate selection: propose new cloud sizes from the measured
   variance of the log-likelihood estimator at the ensemble mean
   (``double``, ``rescale_var``, ``rescale_std``, ``novel_var``,
   ``novel_esjd``) or keep it fixed (``fixed``).
3. Exchange: swap every particle's state cloud for one of the new size,
   either keeping weights exactly unchanged (``replace``), importance
   reweighting by the likelihood ratio (``reweight``), or restarting the
   whole run from a refitted proposal (``reinit``).

The number of mutation sweeps R is re-tuned from the first sweep's ESJD
whenever the trigger fires. ``novel_esjd`` instead scores several
candidate sizes by the predicted mutation cost 1/(nx * R) and keeps the
cheapest, testing in ascending order and reverting one step once the
score worsens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.mixture import GaussianMixture

from . import rngs
from .filtering import normalize_log_weights, run_filter
from .models.base import StateSpaceModel
from .mutation import default_proposal, pmmh_sweep

STAGE2_CHOICES = ("fixed", "double", "rescale_var", "rescale_std", "novel_var", "novel_esjd")
STAGE3_CHOICES = ("reweight", "reinit", "replace")

# variance sentinel used when probe runs degenerate (any -inf log-likelihood)
VAR_CAP = 1e4

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AdaptPolicy:
    """Tuning constants for the three adaptation stages."""

    stage2: str = "novel_esjd"
    stage3: str = "replace"
    esjd_target: float = 6.0
    var_probes: int = 100  # likelihood-variance estimates per measurement
    nx_min: int = 10
    nx_max: int | None = None
    var_band: tuple = (0.95**2, 1.05**2)  # no-change band around the variance target
    temper_floor: float = 0.6  # caps the tempered variance target at 1/0.36
    upper_factor: float = 2.0  # over-target trigger at upper_factor * esjd_target
    rounding: str = "ceil"  # "ceil" | "ceil_to_10"
    max_sweeps: int = 100

    def validate(self) -> None:
        if self.stage2 not in STAGE2_CHOICES:
            raise ValueError(f"stage2 must be one of {STAGE2_CHOICES}, got {self.stage2!r}")
        if self.stage3 not in STAGE3_CHOICES:
            raise ValueError(f"stage3 must be one of {STAGE3_CHOICES}, got {self.stage3!r}")
        if self.stage2 == "novel_esjd" and self.stage3 != "replace":
            raise ValueError("novel_esjd requires stage3='replace'")
        if self.rounding not in ("ceil", "ceil_to_10"):
            raise ValueError(f"rounding must be 'ceil' or 'ceil_to_10', got {self.rounding!r}")
        if self.esjd_target <= 0.0:
            raise ValueError("esjd_target must be positive")
        if self.var_probes < 2:
            raise ValueError("var_probes must be at least 2")
        if self.nx_min < 1:
            raise ValueError("nx_min must be at least 1")
        if self.nx_max is not None and self.nx_max < self.nx_min:
            raise ValueError("nx_max must be >= nx_min")
        if not 0.0 < self.var_band[0] < self.var_band[1]:
            raise ValueError("var_band must satisfy 0 < lo < hi")
        if not 0.0 < self.temper_floor <= 1.0:
            raise ValueError("temper_floor must be in (0, 1]")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


@dataclass(frozen=True)
class VarEstimate:
    """Sample variance of repeated log-likelihood estimates at one point."""

    nx: int
    var: float  # inf when any probe run degenerated
    theta_ref: np.ndarray
    ll_count: int


@dataclass(frozen=True)
class MutateOutcome:
    """Summary of one resample-move stage."""

    esjd: float  # summed over all sweeps performed this stage
    sweeps: int  # the tuned schedule length R
    accepted: int
    proposed: int
    adapted: bool
    var: float | None  # measured likelihood variance, when estimated


@dataclass(frozen=True)
class ReinitRequest:
    """Signal that the run should restart from a refitted proposal."""

    nx: int
    mixture: "MixtureRef"


def should_adapt(esjd_prev: float, policy: AdaptPolicy) -> bool:
    """Stage-1 trigger given the previous stage's total ESJD.

    Fires below the target always; above upper_factor * target only for
    strategies that can undo an overshoot (not ``double``, whose size
    never shrinks, and not ``reinit``, which assumes growth).
    """
    if esjd_prev < policy.esjd_target:
        return True
    if policy.stage2 != "double" and policy.stage3 != "reinit":
        return esjd_prev > policy.upper_factor * policy.esjd_target
    return False


def variance_scale(temper: float, flavor: str) -> float:
    """Variance-target multiplier G: 1 for annealing, 1/max(0.36, g^2) tempered.

    A likelihood raised to g has log-variance scaled by g^2, so early
    tempering stages tolerate proportionally noisier estimators; the
    floor keeps the implied target below ~2.8.
    """
    if flavor == "da":
        return 1.0
    return 1.0 / max(0.6**2, temper * temper)


def _round_up(value: float, mode: str) -> int:
    # the tiny slack absorbs float fuzz on exact-integer products
    if mode == "ceil_to_10":
        return 10 * int(math.ceil(value / 10.0 - 1e-9))
    return int(math.ceil(value - 1e-9))


def sweeps_for_target(esjd_first: float, policy: AdaptPolicy) -> int:
    """Mutation sweeps needed to reach the ESJD target, from sweep one's ESJD."""
    if esjd_first <= 0.0:
        return policy.max_sweeps
    needed = int(math.ceil(policy.esjd_target / esjd_first - 1e-9))
    return max(1, min(policy.max_sweeps, needed))


def candidates_stage2(
    nx: int,
    var: float | None,
    temper: float,
    policy: AdaptPolicy,
    flavor: str,
) -> list:
    """Candidate cloud sizes for the configured stage-2 strategy, ascending.

    ``var`` is the measured log-likelihood variance at the current size
    (ignored by ``fixed`` and ``double``). Candidates are rounded up,
    clamped to [nx_min, nx_max] (and to at least the current size under
    ``reinit``), and deduplicated.
    """
    if policy.stage2 == "fixed":
        return [nx]
    scale = variance_scale(temper, flavor)
    if policy.stage2 == "double":
        raw = [2.0 * nx]
    else:
        if var is None:
            raise ValueError(f"stage2 {policy.stage2!r} needs a variance estimate")
        var = min(float(var), VAR_CAP)
        ratio = var / scale
        # the rescale rules always target variance 1: raising the target with
        # the tempering exponent only amplifies their size swings
        if policy.stage2 == "rescale_var":
            raw = [nx * var]
        elif policy.stage2 == "rescale_std":
            raw = [nx * math.sqrt(var)]
        elif policy.stage2 == "novel_var":
            if scale * policy.var_band[0] < var < scale * policy.var_band[1]:
                return [nx]
            raw = [nx * ratio**0.5, nx * ratio**0.75, nx * ratio]
        elif policy.stage2 == "novel_esjd":
            raw = [float(nx), 2.0 * nx, nx * ratio**0.5, nx * ratio]
        else:
            raise ValueError(f"unknown stage2 strategy {policy.stage2!r}")
    lo = policy.nx_min if policy.stage3 != "reinit" else max(policy.nx_min, nx)
    hi = policy.nx_max if policy.nx_max is not None else np.inf
    clamped = (min(max(_round_up(v, policy.rounding), lo), hi) for v in raw)
    return sorted({int(c) for c in clamped})


def estimate_loglik_variance(
    model: StateSpaceModel,
    y: np.ndarray,
    t_end: int,
    theta_ref: np.ndarray,
    nx: int,
    n_probes: int,
    rng_for,
) -> VarEstimate:
    """Run n_probes independent filters at theta_ref and take the sample variance.

    Any degenerate probe makes the variance infinite (reported via the
    sentinel), which candidate arithmetic treats as "far too noisy".
    """
    lls = np.empty(n_probes)
    ll_count = 0
    for i in range(n_probes):
        out = run_filter(model, theta_ref, y, t_end, nx, rng_for(i))
        lls[i] = out.log_lik
        ll_count += out.ll_count
    if np.any(np.isneginf(lls)):
        var = np.inf
    else:
        var = float(np.var(lls, ddof=1))
    return VarEstimate(nx=nx, var=var, theta_ref=np.asarray(theta_ref, dtype=float), ll_count=ll_count)


def replace_clouds(ensemble, model: StateSpaceModel, y, t_end: int, nx_new: int, rng_for) -> None:
    """Exchange every state cloud for a fresh one of size nx_new.

    The optimal backward-kernel choice makes every incremental weight
    exactly one, so parameter weights are left bit-for-bit untouched.
    """
    transform = model.transform
    for n, particle in enumerate(ensemble.particles):
        out = run_filter(model, transform.to_constrained(particle.phi), y, t_end, nx_new, rng_for(n))
        particle.cloud = out.cloud
        ensemble.tll += out.ll_count
    ensemble.nx = int(nx_new)


def reweight_clouds(ensemble, model: StateSpaceModel, y, t_end: int, nx_new: int, rng_for) -> None:
    """Exchange clouds and importance-reweight by the likelihood ratio.

    The incremental weight is (p_new / p_old)^temper, where temper is the
    current likelihood exponent (one under data annealing).
    """
    old = np.array([p.log_lik for p in ensemble.particles])
    if np.any(old == -np.inf):
        raise RuntimeError("cannot reweight from a degenerate likelihood estimate")
    transform = model.transform
    new = np.empty_like(old)
    for n, particle in enumerate(ensemble.particles):
        out = run_filter(model, transform.to_constrained(particle.phi), y, t_end, nx_new, rng_for(n))
        particle.cloud = out.cloud
        new[n] = out.log_lik
        ensemble.tll += out.ll_count
    ensemble.log_weights = normalize_log_weights(
        ensemble.log_weights + ensemble.temper * (new - old)
    )
    ensemble.nx = int(nx_new)


class MixtureRef:
    """Gaussian mixture on the unconstrained scale, used as a restart proposal."""

    def __init__(self, weights: np.ndarray, means: np.ndarray, covs: np.ndarray):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.covs = np.asarray(covs, dtype=float)
        self._chols = np.linalg.cholesky(self.covs)
        # per-component log normalising constants
        dim = self.means.shape[1]
        logdets = 2.0 * np.log(np.diagonal(self._chols, axis1=1, axis2=2)).sum(axis=1)
        self._lognorm = np.log(self.weights) - 0.5 * (dim * _LOG_2PI + logdets)

    @property
    def n_components(self) -> int:
        return int(self.weights.shape[0])

    def log_density(self, phi: np.ndarray):
        """Log mixture density; accepts a single vector or (n, dim) batch."""
        phi = np.asarray(phi, dtype=float)
        single = phi.ndim == 1
        pts = phi[None, :] if single else phi
        comp = np.empty((pts.shape[0], self.n_components))
        for j in range(self.n_components):
            diff = pts - self.means[j]
            sol = solve_triangular(self._chols[j], diff.T, lower=True)
            comp[:, j] = self._lognorm[j] - 0.5 * np.sum(sol * sol, axis=0)
        m = comp.max(axis=1)
        out = m + np.log(np.exp(comp - m[:, None]).sum(axis=1))
        return float(out[0]) if single else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        comps = np.searchsorted(cdf, rng.random(n))
        z = rng.standard_normal((n, self.means.shape[1]))
        draws = self.means[comps] + np.einsum("nij,nj->ni", self._chols[comps], z)
        return draws


def fit_mixture(phis: np.ndarray, rng: np.random.Generator, n_components: int = 3) -> MixtureRef:
    """Fit the restart proposal to the current unconstrained particles.

    Falls back to a single moment-matched Gaussian when the EM fit is
    degenerate (too few distinct points, non-finite parameters, or a
    component covariance that is not positive definite).
    """
    phis = np.asarray(phis, dtype=float)
    n, dim = phis.shape
    try:
        gm = GaussianMixture(
            n_components=n_components,
            covariance_type="full",
            reg_covar=1e-6,
            max_iter=200,
            n_init=1,
            random_state=int(rng.integers(2**31 - 1)),
        ).fit(phis)
        weights = gm.weights_
        means = gm.means_
        covs = gm.covariances_
        if not (
            np.all(np.isfinite(weights)) and np.all(np.isfinite(means)) and np.all(np.isfinite(covs))
        ):
            raise ValueError("non-finite mixture fit")
        return MixtureRef(weights, means, covs)
    except (ValueError, np.linalg.LinAlgError):
        mean = phis.mean(axis=0)
        centred = phis - mean
        cov = centred.T @ centred / max(n - 1, 1) + 1e-9 * np.eye(dim)
        return MixtureRef(np.ones(1), mean[None, :], cov[None, :, :])


def reinit_smc2(ensemble, nx_new: int, seed: int, epoch: int) -> ReinitRequest:
    """Fit the restart proposal to the current ensemble and request a restart."""
    rng = rngs.substream(seed, rngs.REFIT, epoch, ensemble.d)
    mixture = fit_mixture(ensemble.phis, rng)
    return ReinitRequest(nx=int(nx_new), mixture=mixture)


def _ensemble_mean_theta(ensemble, model: StateSpaceModel) -> np.ndarray:
    """Weighted ensemble mean on the unconstrained scale, mapped back."""
    phis = ensemble.phis
    w = ensemble.weights
    return model.transform.to_constrained(w @ phis)


def _select_nx(ensemble, model, y, t_end, policy, flavor, seed, epoch):
    """Stage-2 choice of the new cloud size (all strategies except novel_esjd)."""
    stage = ensemble.d
    if policy.stage2 == "double":
        cands = candidates_stage2(ensemble.nx, None, ensemble.temper, policy, flavor)
        return cands[0], None

    theta_ref = _ensemble_mean_theta(ensemble, model)

    def probe_rng(probe):
        return lambda i: rngs.substream(seed, rngs.VARIANCE, epoch, stage, probe, i)

    var_est = estimate_loglik_variance(
        model, y, t_end, theta_ref, ensemble.nx, policy.var_probes, probe_rng(0)
    )
    ensemble.tll += var_est.ll_count
    cands = candidates_stage2(ensemble.nx, var_est.var, ensemble.temper, policy, flavor)
    if policy.stage2 != "novel_var" or len(cands) == 1:
        return cands[0], var_est

    # novel_var: measure the variance at each candidate and take the one
    # with the highest variance still below the ceiling (cheapest adequate)
    ceiling = variance_scale(ensemble.temper, flavor) * policy.var_band[1]
    measured = []
    for j, cand in enumerate(cands):
        est = estimate_loglik_variance(
            model, y, t_end, theta_ref, cand, policy.var_probes, probe_rng(1 + j)
        )
        ensemble.tll += est.ll_count
        measured.append(est.var)
    qualifying = [(v, c) for v, c in zip(measured, cands) if v <= ceiling]
    if qualifying:
        nx_new = max(qualifying)[1]
    else:
        nx_new = cands[-1]  # nothing meets the ceiling; take the largest
    return nx_new, var_est


def adaptive_mutation(
    ensemble,
    model: StateSpaceModel,
    y: np.ndarray,
    policy: AdaptPolicy,
    flavor: str,
    esjd_prev: float,
    prev_sweeps: int,
    seed: int,
    epoch: int,
    ref_log_density=None,
):
    """Resample-move stage for every strategy except ``novel_esjd``.

    When triggered, picks a new cloud size (stage 2), applies the
    exchange (stage 3), then re-tunes the sweep count from the first
    sweep's ESJD. Returns a MutateOutcome, or a ReinitRequest when the
    ``reinit`` exchange asks for a restart. Mutates the ensemble in place.
    """
    t_end = len(y) if flavor == "dt" else ensemble.d
    stage = ensemble.d
    adapt = should_adapt(esjd_prev, policy)
    var_value = None

    if adapt and policy.stage2 != "fixed":
        nx_new, var_est = _select_nx(ensemble, model, y, t_end, policy, flavor, seed, epoch)
        var_value = None if var_est is None else var_est.var
        if nx_new != ensemble.nx:
            if policy.stage3 == "reinit":
                return reinit_smc2(ensemble, nx_new, seed, epoch)
            exchange = replace_clouds if policy.stage3 == "replace" else reweight_clouds
            exchange(
                ensemble, model, y, t_end, nx_new,
                lambda n: rngs.substream(seed, rngs.EXCHANGE, epoch, stage, 0, n),
            )

    proposal = default_proposal(ensemble.phis, ensemble.weights)

    def run_sweep(idx):
        rep = pmmh_sweep(
            ensemble.particles, model, y, t_end, ensemble.temper, proposal, ensemble.nx,
            lambda n: rngs.substream(seed, rngs.MUTATE, epoch, stage, idx, n),
            ref_log_density,
        )
        ensemble.tll += rep.ll_count
        return rep

    first = run_sweep(0)
    n_sweeps = sweeps_for_target(first.esjd, policy) if adapt else max(1, prev_sweeps)
    esjd_total = first.esjd
    accepted = first.accepted
    proposed = first.proposed
    for r in range(1, n_sweeps):
        rep = run_sweep(r)
        esjd_total += rep.esjd
        accepted += rep.accepted
        proposed += rep.proposed
    return MutateOutcome(
        esjd=esjd_total, sweeps=n_sweeps, accepted=accepted, proposed=proposed,
        adapted=adapt, var=var_value,
    )


def adaptive_mutation_esjd(
    ensemble,
    model: StateSpaceModel,
    y: np.ndarray,
    policy: AdaptPolicy,
    flavor: str,
    esjd_prev: float,
    prev_sweeps: int,
    seed: int,
    epoch: int,
    ref_log_density=None,
):
    """Resample-move stage for the ``novel_esjd`` strategy.

    Candidate sizes are tested in ascending order: each gets a fresh
    cloud exchange and one scoring sweep, and the predicted mutation cost
    1/(nx * R) decides the winner. A candidate equal to the current cloud
    size keeps its carried clouds instead of exchanging: refreshing the
    estimates of resampled survivors would reset them to typical draws
    and the scoring sweep would then measure symmetric noise-vs-noise
    acceptance, hiding the stickiness that signals an inadequate cloud
    size. Testing stops as soon as a candidate scores worse than its
    predecessor (reverting to that predecessor with a fresh cloud
    exchange) or exactly ties it. The winner's scoring sweep counts as
    the first of its R sweeps. The stage ESJD sums every sweep performed,
    including losing candidates' scoring sweeps, since those moves also
    diversified the retained parameter particles.
    """
    t_end = len(y) if flavor == "dt" else ensemble.d
    stage = ensemble.d
    proposal = default_proposal(ensemble.phis, ensemble.weights)

    sweep_idx = 0
    event = 0

    def run_sweep(nx):
        nonlocal sweep_idx
        rep = pmmh_sweep(
            ensemble.particles, model, y, t_end, ensemble.temper, proposal, nx,
            lambda n, idx=sweep_idx: rngs.substream(seed, rngs.MUTATE, epoch, stage, idx, n),
            ref_log_density,
        )
        sweep_idx += 1
        ensemble.tll += rep.ll_count
        return rep

    def exchange(nx):
        nonlocal event
        replace_clouds(
            ensemble, model, y, t_end, nx,
            lambda n, ev=event: rngs.substream(seed, rngs.EXCHANGE, epoch, stage, ev, n),
        )
        event += 1

    if not should_adapt(esjd_prev, policy):
        n_sweeps = max(1, prev_sweeps)
        esjd_total = 0.0
        accepted = proposed = 0
        for _ in range(n_sweeps):
            rep = run_sweep(ensemble.nx)
            esjd_total += rep.esjd
            accepted += rep.accepted
            proposed += rep.proposed
        return MutateOutcome(
            esjd=esjd_total, sweeps=n_sweeps, accepted=accepted, proposed=proposed,
            adapted=False, var=None,
        )

    theta_ref = _ensemble_mean_theta(ensemble, model)
    var_est = estimate_loglik_variance(
        model, y, t_end, theta_ref, ensemble.nx, policy.var_probes,
        lambda i: rngs.substream(seed, rngs.VARIANCE, epoch, stage, 0, i),
    )
    ensemble.tll += var_est.ll_count
    cands = candidates_stage2(ensemble.nx, var_est.var, ensemble.temper, policy, flavor)

    esjd_total = 0.0
    accepted = proposed = 0
    tested = []  # (nx, sweeps) per scored candidate
    chosen = 0
    reverted = False
    prev_score = None
    for cand in cands:
        if cand != ensemble.nx:
            exchange(cand)
        rep = run_sweep(cand)
        esjd_total += rep.esjd
        accepted += rep.accepted
        proposed += rep.proposed
        score = 1.0 / (cand * sweeps_for_target(rep.esjd, policy))
        tested.append((cand, sweeps_for_target(rep.esjd, policy)))
        if prev_score is not None:
            if score < prev_score:
                chosen = len(tested) - 2
                reverted = True
                break
            if score == prev_score:
                chosen = len(tested) - 1
                break
        prev_score = score
        chosen = len(tested) - 1

    nx_star, n_sweeps = tested[chosen]
    if reverted:
        exchange(nx_star)
    for _ in range(1, n_sweeps):
        rep = run_sweep(nx_star)
        esjd_total += rep.esjd
        accepted += rep.accepted
        proposed += rep.proposed
    return MutateOutcome(
        esjd=esjd_total, sweeps=n_sweeps, accepted=accepted, proposed=proposed,
        adapted=True, var=var_est.var,
    )
