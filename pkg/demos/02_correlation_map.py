"""Where do link outages correlate?

A 2 x 3 grid of vehicles 1500 m apart with two slots per frame and Nakagami
shape 2. Links are grouped by sender; the blocks on the diagonal hold pairs of
links that share a sender, and therefore always share a slot.
"""
import numpy as np

from aloha_corr import correlation_matrix, derive_radio_params, grid_deployment, link_stats
from aloha_corr import mean_power_matrix
from aloha_corr.deployment import SlotConfig

m = 2
dep = grid_deployment(2, 3, 1500.0, q=0.5, shape=2)
theta, noise = derive_radio_params(bandwidth=1e7, ref_bitrate=1.08e7, m=m)
stats = link_stats("HD", mean_power_matrix(dep), dep, SlotConfig(m, theta, noise))
corr, _ = correlation_matrix(stats)

print(f"theta = {theta:.3f}, noise = {noise:.3e} W")
print("success probabilities (sender -> receiver):")
for lab, p in zip(stats.labels(), stats.p):
    print(f"  {lab}: {p:.3f}")

senders = np.array([i for i, _ in stats.links])
same_sender = np.equal.outer(senders, senders) & ~np.eye(len(senders), dtype=bool)
other = ~np.equal.outer(senders, senders)
print(f"\nsame-sender pairs:  mean corr {corr[same_sender].mean():+.3f}, "
      f"positive share {np.mean(corr[same_sender] > 0):.0%}")
print(f"different senders: mean corr {corr[other].mean():+.3f}, "
      f"range [{corr[other].min():+.3f}, {corr[other].max():+.3f}]")

np.set_printoptions(precision=2, suppress=True, linewidth=160)
print("\ncorrelation block for senders 1 and 2:")
print(corr[:10, :10])
