"""How likely is one packet to get through?

Three nodes on a line, one metre apart. Node 0 sends to node 1 while node 2
may be talking in the same slot. We compare the closed-form success
probability with a brute-force simulation of the fading powers.
"""
import numpy as np

from aloha_corr import Deployment, gamma_success, mean_power_matrix

dep = Deployment(np.array([[0.0, 0], [1, 0], [2, 0]]), np.ones(3), np.array([2, 2, 2]),
                 wavelength=1.0)
ch = mean_power_matrix(dep)
theta, noise = 2.0, 1e-13

for xi in (0.0, 0.25, 0.5, 1.0):
    exact = gamma_success(0, 1, {2: xi}, ch, dep, theta, noise)

    rng = np.random.default_rng(0)
    draws = 10 ** 6
    signal = rng.gamma(2, 1 / (2 * ch.mu[0, 1]), draws)
    interferer = rng.gamma(2, 1 / (2 * ch.mu[2, 1]), draws) * (rng.random(draws) < xi)
    mc = np.mean(signal >= theta * (noise + interferer))

    print(f"interferer active w.p. {xi:4.2f}: closed form {exact:.5f}, simulated {mc:.5f}")

# The closed form is affine in the activity probability: halfway between silent and
# always-on is exactly the midpoint.
g0, g1 = (gamma_success(0, 1, {2: v}, ch, dep, theta, noise) for v in (0.0, 1.0))
print("midpoint check:", gamma_success(0, 1, {2: 0.5}, ch, dep, theta, noise), (g0 + g1) / 2)
