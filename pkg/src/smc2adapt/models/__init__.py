"""State-space models and the model registry."""

from __future__ import annotations

from .base import (
    Dataset,
    StateSpaceModel,
    load_dataset,
    log_prior_unconstrained,
    save_dataset,
    simulate_dataset,
)
from .brownian import BrownianMotion
from .ricker import Ricker
from .stoch_vol import StochasticVolatility
from .theta_logistic import ThetaLogistic

MODEL_CLASSES = {
    BrownianMotion.name: BrownianMotion,
    StochasticVolatility.name: StochasticVolatility,
    ThetaLogistic.name: ThetaLogistic,
    Ricker.name: Ricker,
}


def get_model(name: str) -> StateSpaceModel:
    """Instantiate a registered model by id ("bm", "sv1f", ...)."""
    try:
        cls = MODEL_CLASSES[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_CLASSES))
        raise ValueError(f"unknown model {name!r}; known models: {known}") from None
    return cls()


__all__ = [
    "Dataset",
    "StateSpaceModel",
    "BrownianMotion",
    "StochasticVolatility",
    "ThetaLogistic",
    "Ricker",
    "MODEL_CLASSES",
    "get_model",
    "simulate_dataset",
    "save_dataset",
    "load_dataset",
    "log_prior_unconstrained",
]
