"""Accuracy-per-cost comparison of sizing strategies.

Each method runs the same inference problem; accuracy is mean squared
error of the unconstrained posterior mean against a long exact MCMC
chain, cost is total state-particle transitions. Scores are ratios
baseline/method, so Z > 1 means a better accuracy-per-cost tradeoff
than fixed filters.
"""

from smc2adapt.adaptation import AdaptPolicy
from smc2adapt.engine import SmcConfig, run_smc2
from smc2adapt.harness import (
    posterior_mean_unconstrained,
    reference_posterior_mean,
    score_runs,
)
from smc2adapt.models import BrownianMotion, simulate_dataset

model = BrownianMotion()
data = simulate_dataset(model, model.default_theta, n_obs=30, seed=5)

ref = reference_posterior_mean(model, data.y, "exact_mcmc", 50_000, seed=99)
print(f"reference chain acceptance: {ref.accept_rate:.2f}")

methods = [
    ("fixed Nx=100", AdaptPolicy(stage2="fixed"), 100),
    ("double", AdaptPolicy(stage2="double", stage3="replace"), 10),
    ("rescale-std", AdaptPolicy(stage2="rescale_std", stage3="replace"), 10),
    ("measured-jump", AdaptPolicy(stage2="novel_esjd", stage3="replace"), 10),
]

labels, means, tlls = [], [], []
for label, policy, nx0 in methods:
    config = SmcConfig(flavor="da", n_theta=100, nx0=nx0, seed=21, policy=policy)
    ensemble, trace = run_smc2(model, data, config)
    labels.append(label)
    means.append(posterior_mean_unconstrained(ensemble))
    tlls.append(ensemble.tll)

print()
print(f"{'method':>14} {'Z_MSE':>8} {'Z_TLL':>8} {'Z':>8}")
for row in score_runs(labels, means, tlls, ref.mean_u):
    print(f"{row.label:>14} {row.z_mse:>8.3f} {row.z_tll:>8.3f} {row.z:>8.3f}")
