"""Candidate state-particle counts proposed by each sizing strategy.

Given the measured variance of repeated log-likelihood estimates at the
current Nx, each strategy proposes a ladder of new counts: doubling
ignores the measurement, the rescale rules solve for a variance of one
in closed form, and the novel rules bracket the rescale answer with
cheaper and more expensive alternatives. Tempered targets relax the
variance goal at small g, which only the novel rules exploit.
"""

from smc2adapt.adaptation import AdaptPolicy, candidates_stage2

STRATEGIES = ("double", "rescale_var", "rescale_std", "novel_var", "novel_esjd")


def show(title, temper, flavor):
    print(title)
    header = f"{'var':>6} |" + "".join(f" {s:>24}" for s in STRATEGIES)
    print(header)
    print("-" * len(header))
    for var in (0.5, 1.0, 1.5, 50.0):
        row = f"{var:>6.1f} |"
        for strat in STRATEGIES:
            policy = AdaptPolicy(stage2=strat, stage3="replace")
            cands = candidates_stage2(100, var, temper, policy, flavor)
            row += f" {str(cands):>24}"
        print(row)
    print()


show("data annealing (target variance 1), Nx = 100", 1.0, "da")
show("density tempering at g = 0.5 (target 1/0.36 for novel rules)", 0.5, "dt")
