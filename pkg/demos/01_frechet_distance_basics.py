"""Frechet distance between Gaussians, from first principles
=============================================================

Fit Gaussian statistics to two embedding clouds and measure the distance
between them. Closed-form cases show what the number means.
"""

import numpy as np

from fadtk import GaussianStats, estimate_gaussian, frechet_distance

rng = np.random.default_rng(0)

# Two 1-D Gaussians: N(0, 1) vs N(3, 4).
# Distance = (3-0)^2 + (1 + 4 - 2*sqrt(1*4)) = 9 + 1 = 10.
a = GaussianStats(np.array([0.0]), np.array([[1.0]]), count=2, backend_id="demo")
b = GaussianStats(np.array([3.0]), np.array([[4.0]]), count=2, backend_id="demo")
print("1-D closed form:", frechet_distance(a, b))

# The same thing estimated from samples: draw two clouds and fit.
cloud_a = rng.normal(0.0, 1.0, size=(20000, 1))
cloud_b = rng.normal(3.0, 2.0, size=(20000, 1))
est = frechet_distance(estimate_gaussian(cloud_a, "demo"), estimate_gaussian(cloud_b, "demo"))
print("estimated from 20k samples:", round(est, 3), "(should be close to 10)")

# In higher dimensions the covariance term matters: two clouds with the same
# mean but different orientation still have a nonzero distance.
cov_1 = np.array([[2.0, 1.5], [1.5, 2.0]])
cov_2 = np.array([[2.0, -1.5], [-1.5, 2.0]])
same_mean_1 = GaussianStats(np.zeros(2), cov_1, count=2, backend_id="demo")
same_mean_2 = GaussianStats(np.zeros(2), cov_2, count=2, backend_id="demo")
print("same mean, rotated covariance:", round(frechet_distance(same_mean_1, same_mean_2), 4))

# Equal covariances cancel entirely; only the mean shift remains.
shifted = GaussianStats(np.array([1.0, -2.0]), cov_1, count=2, backend_id="demo")
print("equal covariance, mean shift (1,-2):", round(frechet_distance(same_mean_1, shifted), 12))
