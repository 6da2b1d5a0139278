"""Simulated consensus runs between the two spectral envelopes.

Starting from each unit vector, we iterate x <- (I - eps L) x with link
successes drawn from the physical slot and fading model, and compare the
mean squared disagreement with the lower envelope r2**(2t) (summed over
starts) and the upper envelope 2 sqrt(n-1) w2**(2t) (per start).
"""
import numpy as np

from aloha_corr import (PhysicalSampler, derive_radio_params, grid_deployment, laplacian_moments,
                        link_stats, mean_power_matrix, minimize_eps_rho, radii,
                        simulate_consensus)
from aloha_corr.deployment import SlotConfig

m, k = 3, 20
dep = grid_deployment(2, 3, 1500.0, q=0.5, shape=1)
theta, noise = derive_radio_params(1e7, 1.08e7, m)
ch, slots = mean_power_matrix(dep), SlotConfig(m, theta, noise)
mom = laplacian_moments(link_stats("HD", ch, dep, slots))
eps = minimize_eps_rho(mom.EL).eps
s = radii(mom, eps)
traj = simulate_consensus(PhysicalSampler(ch, dep, slots), eps, k, trials=10_000, seed=1)

n = dep.n
print(f"eps = {eps:.4f}, r2 = {s.r2:.4f}, w2 = {s.w2:.4f}, essential radius {s.rho_ess:.4f}")
print("  t   sum over starts   r2^2t     worst start   2 sqrt(n-1) w2^2t")
for t in range(0, k, 2):
    print(f"{t + 1:3d}   {traj.total[t]:12.4e}  {s.r2 ** (2 * t + 2):9.3e}  "
          f"{traj.msd[t].max():12.4e}  {2 * np.sqrt(n - 1) * s.w2 ** (2 * t + 2):9.3e}")
