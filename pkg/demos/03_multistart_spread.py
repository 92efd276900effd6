#!/usr/bin/env python3
"""Multi-start search over random power initializations, 40-node network.

The joint loop converges to a local minimum that depends on the starting
point, so it is rerun from 100 random log-uniform initializations; the
spread of the resulting totals shows how much a repeated search buys.
"""

import numpy as np

from adhocnet import Scenario, multi_start

scenario = Scenario(n_nodes=40, spreading_gain=128, master_seed=21)
result = multi_start(scenario, trials=100, seed=21)

totals = np.array([t.total_power for t in result.trials
                   if t.status == "local_min"])
energies = np.array([t.energy_per_bit for t in result.trials
                     if t.status == "local_min"])
print(f"{len(totals)}/100 trials converged")
print("total transmitted power over trials [W]:")
print(f"  best   {totals.min():.4e}")
print(f"  median {np.median(totals):.4e}")
print(f"  worst  {totals.max():.4e}")
print(f"  spread (worst/best) {totals.max() / totals.min():.1f}x")
print(f"best trial energy per bit {energies.min():.4e} J")

print("\nsorted per-trial totals (each row one decile):")
ordered = np.sort(totals)
for q in range(0, 101, 10):
    k = min(len(ordered) - 1, int(round(q / 100 * (len(ordered) - 1))))
    print(f"  p{q:3d}: {ordered[k]:.4e}")

best = result.best
heavy = np.argsort(best.powers)[::-1][:5]
print("\nheaviest transmitters in the best solution:")
for i in heavy:
    print(f"  node {i:2d}: {best.powers[i]:.3e} W")
