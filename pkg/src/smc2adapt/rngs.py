"""Deterministic random-number substreams.

Every stochastic event in a run draws from its own generator, derived from
the master seed and a structured key (purpose code plus indices such as
restart epoch, stage, particle). Runs with the same seed therefore replay
bit-identically regardless of how work is ordered or parallelised.
"""

from __future__ import annotations

import numpy as np

# Purpose codes keying the top level of the substream tree.
DATA = 0      # synthetic dataset generation
PRIOR = 1     # initial parameter draws
INIT_PF = 2   # state filters run at ensemble initialisation
EXTEND = 3    # one-observation filter extensions (data annealing)
RESAMPLE = 4  # parameter-particle resampling
MUTATE = 5    # mutation sweeps
VARIANCE = 6  # log-likelihood variance probes
EXCHANGE = 7  # state-cloud exchanges (replace / reweight)
REFIT = 8     # proposal refits for reinitialisation
CHAIN = 9     # reference MCMC chains


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for one stochastic event.

    Parameters
    ----------
    seed : int
        Master seed of the run.
    *key : int
        Event key, by convention ``(purpose, *indices)`` using the module
        constants above. Distinct keys give statistically independent
        streams.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
