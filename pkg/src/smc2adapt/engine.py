"""SMC^2 over model parameters with adaptive state-particle counts.

Two flavors share one ensemble representation:

- density tempering ("dt"): filters run over the full dataset once, and
  the likelihood exponent g climbs from 0 to 1 along an adaptive
  temperature ladder chosen by bisection on the effective sample size;
- data annealing ("da"): observations are assimilated one at a time by
  extending each particle's filter, with a resample-move step whenever
  the parameter ESS drops below a fraction of the ensemble size.

Every resample-move step delegates to the adaptation module, which may
grow or shrink the state clouds and re-tune the number of mutation
sweeps. The ``reinit`` exchange aborts the current pass and restarts the
run from a mixture fitted to the ensemble; restarts are tracked as
epochs so random streams never collide.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import rngs
from .adaptation import AdaptPolicy, MixtureRef, ReinitRequest, adaptive_mutation, adaptive_mutation_esjd
from .filtering import StateCloud, ess, extend_filter, multinomial_resample, normalize_log_weights, run_filter
from .models.base import Dataset, StateSpaceModel, log_prior_unconstrained
from .mutation import ThetaParticle


@dataclass(frozen=True)
class SmcConfig:
    """Run-level settings for one SMC^2 pass."""

    flavor: str  # "dt" | "da"
    n_theta: int
    nx0: int
    seed: int
    policy: AdaptPolicy = field(default_factory=AdaptPolicy)
    ess_frac: float = 0.6  # parameter-ESS fraction for temperature steps / move trigger
    max_restarts: int = 25

    def validate(self) -> None:
        if self.flavor not in ("dt", "da"):
            raise ValueError(f"flavor must be 'dt' or 'da', got {self.flavor!r}")
        if self.n_theta < 2:
            raise ValueError("n_theta must be at least 2")
        if self.nx0 < 1:
            raise ValueError("nx0 must be at least 1")
        if not 0.0 < self.ess_frac < 1.0:
            raise ValueError("ess_frac must be in (0, 1)")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        self.policy.validate()


@dataclass(frozen=True)
class StageRecord:
    """One row of the run trace (cumulative cost, per-stage diagnostics)."""

    d: int
    temper: float
    nx: int
    sweeps: int  # mutation sweeps scheduled this stage (0 if no move)
    esjd: float  # total ESJD over this stage's sweeps (0 if no move)
    ess: float  # parameter ESS before any resampling this stage
    tll: int  # cumulative likelihood evaluations after this stage
    wall_ms: float


@dataclass
class Ensemble:
    """The parameter-particle ensemble and its running state."""

    particles: list
    log_weights: np.ndarray  # normalised: logsumexp == 0
    d: int
    temper: float  # likelihood exponent (1.0 under data annealing)
    nx: int
    tll: int
    trace: list = field(default_factory=list)

    @property
    def n_theta(self) -> int:
        return len(self.particles)

    @property
    def phis(self) -> np.ndarray:
        return np.stack([p.phi for p in self.particles])

    @property
    def log_liks(self) -> np.ndarray:
        return np.array([p.log_lik for p in self.particles])

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def ess(self) -> float:
        return ess(self.weights)


def init_ensemble(
    model: StateSpaceModel,
    y: np.ndarray,
    n_theta: int,
    nx0: int,
    flavor: str,
    seed: int,
    epoch: int = 0,
    mixture: MixtureRef | None = None,
) -> Ensemble:
    """Draw the initial ensemble.

    Parameters come from the model prior, or from ``mixture`` on a
    restart. Tempering starts every particle's filter over the full
    dataset at exponent zero; annealing starts with empty clouds. On a
    data-annealing restart the initial weights carry the prior/mixture
    importance correction.
    """
    particles = []
    log_w = np.zeros(n_theta)
    tll = 0
    if mixture is None:
        prior_rng = rngs.substream(seed, rngs.PRIOR, epoch)
        phis = np.stack(
            [model.transform.to_unconstrained(model.sample_prior(prior_rng)) for _ in range(n_theta)]
        )
    else:
        phis = mixture.sample(n_theta, rngs.substream(seed, rngs.PRIOR, epoch))
        if flavor == "da":
            log_w = np.array(
                [log_prior_unconstrained(model, phi) for phi in phis]
            ) - mixture.log_density(phis)
    for n in range(n_theta):
        if flavor == "dt":
            out = run_filter(
                model, model.transform.to_constrained(phis[n]), y, len(y), nx0,
                rngs.substream(seed, rngs.INIT_PF, epoch, n),
            )
            cloud = out.cloud
            tll += out.ll_count
        else:
            cloud = StateCloud.empty(nx0, model.dim_state)
        particles.append(ThetaParticle(phis[n].copy(), cloud))
    return Ensemble(
        particles=particles,
        log_weights=normalize_log_weights(log_w),
        d=0,
        temper=0.0 if flavor == "dt" else 1.0,
        nx=nx0,
        tll=tll,
    )


def reweight_dt(ensemble: Ensemble, temper_new: float, slopes: np.ndarray | None = None) -> None:
    """Advance the likelihood exponent, reweighting by slope * (g' - g).

    ``slopes`` defaults to the particles' log-likelihood estimates; a
    restarted run passes prior-and-reference-adjusted slopes instead.
    """
    if slopes is None:
        slopes = ensemble.log_liks
    step = temper_new - ensemble.temper
    with np.errstate(invalid="ignore"):
        incr = step * slopes
    incr[np.isnan(incr)] = -np.inf  # 0 * -inf: dead particle stays dead
    ensemble.log_weights = normalize_log_weights(ensemble.log_weights + incr)
    ensemble.temper = float(temper_new)


def reweight_da(ensemble: Ensemble, model: StateSpaceModel, y_next: float, seed: int, epoch: int) -> None:
    """Assimilate the next observation into every particle's filter.

    Parameter weights pick up each filter's incremental likelihood
    estimate; particles whose clouds degenerate get zero weight.
    """
    d_next = ensemble.d + 1
    incrs = np.empty(ensemble.n_theta)
    for n, particle in enumerate(ensemble.particles):
        if not particle.cloud.degenerate:
            ensemble.tll += particle.cloud.nx
        particle.cloud, incrs[n] = extend_filter(
            particle.cloud, model, ensemble_theta(model, particle), y_next,
            rngs.substream(seed, rngs.EXTEND, epoch, d_next, n),
        )
    ensemble.log_weights = normalize_log_weights(ensemble.log_weights + incrs)
    ensemble.d = d_next


def ensemble_theta(model: StateSpaceModel, particle: ThetaParticle) -> np.ndarray:
    """Constrained parameter vector of one particle."""
    return model.transform.to_constrained(particle.phi)


def next_temperature(ensemble: Ensemble, ess_frac: float, slopes: np.ndarray | None = None) -> float:
    """Largest exponent g' <= 1 keeping the reweighted ESS at its target.

    Bisection to 1e-6 (at most 100 halvings); returns 1.0 outright when
    even the full step keeps enough effective particles, and falls back
    to a fixed 0.01 step if no admissible increase is found.
    """
    if slopes is None:
        slopes = ensemble.log_liks
    target = ess_frac * ensemble.n_theta
    g0 = ensemble.temper
    base = ensemble.log_weights

    def ess_at(g: float) -> float:
        with np.errstate(invalid="ignore"):
            incr = (g - g0) * slopes
        incr[np.isnan(incr)] = -np.inf
        lw = base + incr
        z = lw.max()
        if z == -np.inf:
            return 0.0
        w = np.exp(lw - z)
        w /= w.sum()
        return ess(w)

    if ess_at(1.0) >= target:
        return 1.0
    lo, hi = g0, 1.0
    for _ in range(100):
        if hi - lo <= 1e-6:
            break
        mid = 0.5 * (lo + hi)
        if ess_at(mid) >= target:
            lo = mid
        else:
            hi = mid
    if lo <= g0:
        return min(1.0, g0 + 0.01)
    return lo


def resample_ensemble(ensemble: Ensemble, rng: np.random.Generator) -> None:
    """Multinomial resampling of the parameter particles (weights reset)."""
    idx = multinomial_resample(ensemble.weights, ensemble.n_theta, rng)
    ensemble.particles = [ensemble.particles[i].copy() for i in idx]
    ensemble.log_weights = np.full(ensemble.n_theta, -np.log(ensemble.n_theta))


def _mutate(ensemble, model, y, policy, flavor, esjd_prev, prev_sweeps, seed, epoch, ref):
    fn = adaptive_mutation_esjd if policy.stage2 == "novel_esjd" else adaptive_mutation
    return fn(ensemble, model, y, policy, flavor, esjd_prev, prev_sweeps, seed, epoch, ref)


def run_smc2(model: StateSpaceModel, data: Dataset, config: SmcConfig, progress=None):
    """Run one SMC^2 pass; returns (ensemble, trace).

    ``progress``, if given, is called with each StageRecord as it is
    appended. The trace is also left on the ensemble.
    """
    config.validate()
    y = data.y
    seed = config.seed
    policy = config.policy
    runner = _run_tempering if config.flavor == "dt" else _run_annealing

    epoch = 0
    mixture = None
    nx0 = config.nx0
    while True:
        ensemble = init_ensemble(
            model, y, config.n_theta, nx0, config.flavor, seed, epoch, mixture
        )
        request = runner(ensemble, model, y, config, seed, epoch, mixture, progress)
        if request is None:
            return ensemble, ensemble.trace
        epoch += 1
        if epoch > config.max_restarts:
            raise RuntimeError(f"exceeded {config.max_restarts} restarts")
        mixture = request.mixture
        nx0 = request.nx


def _record(ensemble, sweeps, esjd, ess_before, t0, progress) -> None:
    rec = StageRecord(
        d=ensemble.d,
        temper=ensemble.temper,
        nx=ensemble.nx,
        sweeps=sweeps,
        esjd=esjd,
        ess=ess_before,
        tll=ensemble.tll,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )
    ensemble.trace.append(rec)
    if progress is not None:
        progress(rec)


def _run_tempering(ensemble, model, y, config, seed, epoch, mixture, progress):
    """Temperature loop; returns a ReinitRequest to restart, else None."""
    policy = config.policy
    ref = mixture.log_density if mixture is not None else None
    esjd_prev = 0.0
    prev_sweeps = 1
    max_stages = 10_000  # hard stop against a stalled ladder
    for _ in range(max_stages):
        if ensemble.temper >= 1.0:
            return None
        t0 = time.perf_counter()
        slopes = _tempering_slopes(ensemble, model, ref)
        g_new = next_temperature(ensemble, config.ess_frac, slopes)
        reweight_dt(ensemble, g_new, slopes)
        ensemble.d += 1
        ess_before = ensemble.ess
        resample_ensemble(ensemble, rngs.substream(seed, rngs.RESAMPLE, epoch, ensemble.d))
        outcome = _mutate(
            ensemble, model, y, policy, "dt", esjd_prev, prev_sweeps, seed, epoch, ref
        )
        if isinstance(outcome, ReinitRequest):
            return outcome
        esjd_prev = outcome.esjd
        prev_sweeps = outcome.sweeps
        _record(ensemble, outcome.sweeps, outcome.esjd, ess_before, t0, progress)
    raise RuntimeError(f"temperature ladder did not reach 1 in {max_stages} stages")


def _tempering_slopes(ensemble, model, ref):
    """Per-particle d(log weight)/d(temper) for the current tempering path."""
    lls = ensemble.log_liks
    if ref is None:
        return lls
    # restarted path interpolates ref^(1-g) (prior * lik)^g
    phis = ensemble.phis
    priors = np.array([log_prior_unconstrained(model, phi) for phi in phis])
    return lls + priors - ref(phis)


def _run_annealing(ensemble, model, y, config, seed, epoch, mixture, progress):
    """Observation loop; returns a ReinitRequest to restart, else None."""
    policy = config.policy
    esjd_prev = 0.0
    prev_sweeps = 1
    n_obs = len(y)
    while ensemble.d < n_obs:
        t0 = time.perf_counter()
        reweight_da(ensemble, model, y[ensemble.d], seed, epoch)
        ess_before = ensemble.ess
        sweeps, esjd = 0, 0.0
        if ess_before < config.ess_frac * ensemble.n_theta:
            resample_ensemble(ensemble, rngs.substream(seed, rngs.RESAMPLE, epoch, ensemble.d))
            outcome = _mutate(
                ensemble, model, y, policy, "da", esjd_prev, prev_sweeps, seed, epoch, None
            )
            if isinstance(outcome, ReinitRequest):
                return outcome
            esjd_prev = outcome.esjd
            prev_sweeps = outcome.sweeps
            sweeps, esjd = outcome.sweeps, outcome.esjd
        _record(ensemble, sweeps, esjd, ess_before, t0, progress)
    return None
