"""SMC^2 with adaptive state-particle counts.

Sequential Monte Carlo over model parameters where each parameter
particle carries a bootstrap particle filter. The number of state
particles is adapted online from the expected squared jump distance of
the mutation kernel, with exchangeable strategies for proposing a new
count and for carrying the ensemble across the change.
"""

from .adaptation import (
    STAGE2_CHOICES,
    STAGE3_CHOICES,
    AdaptPolicy,
    candidates_stage2,
    estimate_loglik_variance,
    should_adapt,
    sweeps_for_target,
    variance_scale,
)
from .artifacts import (
    summary_payload,
    write_samples_csv,
    write_scores_csv,
    write_summary_json,
    write_trace_csv,
)
from .engine import Ensemble, SmcConfig, StageRecord, init_ensemble, run_smc2
from .filtering import StateCloud, ess, extend_filter, multinomial_resample, run_filter
from .harness import (
    RefPosterior,
    RunMetrics,
    kalman_loglik,
    posterior_mean_unconstrained,
    reference_posterior_mean,
    relative_scores,
    score_runs,
)
from .models import (
    MODEL_CLASSES,
    BrownianMotion,
    Dataset,
    Ricker,
    StateSpaceModel,
    StochasticVolatility,
    ThetaLogistic,
    get_model,
    load_dataset,
    save_dataset,
    simulate_dataset,
)
from .mutation import ProposalSpec, ThetaParticle, default_proposal, make_proposal, pmmh_step
from .transforms import ParamTransform

__version__ = "0.1.0"

__all__ = [
    "AdaptPolicy",
    "BrownianMotion",
    "Dataset",
    "Ensemble",
    "MODEL_CLASSES",
    "ParamTransform",
    "ProposalSpec",
    "RefPosterior",
    "Ricker",
    "RunMetrics",
    "STAGE2_CHOICES",
    "STAGE3_CHOICES",
    "SmcConfig",
    "StageRecord",
    "StateCloud",
    "StateSpaceModel",
    "StochasticVolatility",
    "ThetaLogistic",
    "ThetaParticle",
    "candidates_stage2",
    "default_proposal",
    "ess",
    "estimate_loglik_variance",
    "extend_filter",
    "get_model",
    "init_ensemble",
    "kalman_loglik",
    "load_dataset",
    "make_proposal",
    "multinomial_resample",
    "pmmh_step",
    "posterior_mean_unconstrained",
    "reference_posterior_mean",
    "relative_scores",
    "run_filter",
    "run_smc2",
    "save_dataset",
    "score_runs",
    "should_adapt",
    "simulate_dataset",
    "summary_payload",
    "sweeps_for_target",
    "variance_scale",
    "write_samples_csv",
    "write_scores_csv",
    "write_summary_json",
    "write_trace_csv",
]
