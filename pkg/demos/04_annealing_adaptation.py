"""Data annealing with a deliberately undersized filter.

Starting from Nx = 10 state particles, the measured-jump strategy is
left to discover that the filters are too noisy: whenever parameter
mixing sags it scores candidate sizes by jump distance per unit of
computation and grows the filters. The run prints one line per
adaptation so the growth path is visible.
"""

from smc2adapt.adaptation import AdaptPolicy
from smc2adapt.engine import SmcConfig, run_smc2
from smc2adapt.models import BrownianMotion, simulate_dataset

model = BrownianMotion()
data = simulate_dataset(model, model.default_theta, n_obs=100, seed=1)

config = SmcConfig(
    flavor="da",
    n_theta=100,
    nx0=10,
    seed=2,
    policy=AdaptPolicy(stage2="novel_esjd", stage3="replace"),
)


def report(record):
    if record.sweeps > 0:
        print(f"obs {record.d:>3}: moved with Nx={record.nx:<5} "
              f"sweeps={record.sweeps:<3} esjd={record.esjd:.2f}")


ensemble, trace = run_smc2(model, data, config, progress=report)

nxs = [r.nx for r in trace]
moves = sum(1 for r in trace if r.sweeps > 0)
print()
print(f"observations: {len(trace)}, resample-move events: {moves}")
print(f"state particles: start {nxs[0]}, final {nxs[-1]}")
print(f"total state-particle transitions: {ensemble.tll:,}")
