#!/usr/bin/env python3
"""Monte Carlo capacity: the largest network the power control can carry.

Each trial grows one random deployment node by node; a size counts as
feasible when the initial route assignment admits a convergent power-control
run at the initial powers. The capacity is the largest size whose
feasibility rate stays at or above 95%. Per-trial growth plus carrying
infeasibility forward keeps the rate curve non-increasing by construction.

The full 100-trial scan of the matched-filter L=128 configuration takes a
few tens of seconds; trim `TRIALS` for a quicker look.
"""

from adhocnet import Scenario, capacity_search

TRIALS = 100

scenario = Scenario(spreading_gain=128, receiver="matched", target_sir=12.5)
result = capacity_search(scenario, spreading_gain=128, trials=TRIALS,
                         feasibility_target=0.95, seed=11)

print(f"matched filter, spreading gain {result.spreading_gain}, "
      f"{result.trials} trials per size")
print(f"{'nodes':>6s} {'feasibility rate':>17s}")
for n, rate in zip(result.n_values, result.rates):
    flag = "  <- capacity" if n == result.n_star else ""
    print(f"{n:6d} {rate:>17.2f}{flag}")
print(f"\nlargest size meeting the 95% target: N* = {result.n_star}")
