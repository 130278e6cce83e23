"""Parameter inference for a Levy-driven stochastic volatility model.

Returns are observed, the integrated variance is latent, and the model
likelihood is intractable, which is exactly the setting the
particle-filter-inside-SMC construction targets. A short data-annealing
run keeps the demo fast: real studies would raise both particle counts.
"""

import numpy as np

from smc2adapt.adaptation import AdaptPolicy
from smc2adapt.engine import SmcConfig, run_smc2
from smc2adapt.models import StochasticVolatility, simulate_dataset

model = StochasticVolatility()
data = simulate_dataset(model, model.default_theta, n_obs=40, seed=42)
print(f"simulated {len(data.y)} daily returns, "
      f"sd {np.std(data.y):.3f}")

# nx_max bounds the doubling strategy so the demo stays quick; drop the
# cap (and raise n_obs) for a production-quality run
config = SmcConfig(
    flavor="da",
    n_theta=300,
    nx0=25,
    seed=9,
    policy=AdaptPolicy(stage2="double", stage3="replace", nx_max=200),
)
ensemble, trace = run_smc2(model, data, config)

moves = [r for r in trace if r.sweeps > 0]
print(f"resample-move events: {len(moves)}, final Nx: {trace[-1].nx}")
print()

thetas = model.transform.to_constrained(ensemble.phis)
mean = ensemble.weights @ thetas
sd = np.sqrt(ensemble.weights @ (thetas - mean) ** 2)
print(f"{'param':>8} {'truth':>8} {'post mean':>10} {'post sd':>8}")
for name, t, m, s in zip(model.param_names, model.default_theta, mean, sd):
    print(f"{name:>8} {t:>8.3f} {m:>10.3f} {s:>8.3f}")
