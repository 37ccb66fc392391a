"""
How much do beam weights matter?
================================

Compare uniform, SINR-proportional and inverse-variance weighting on one
scene, then check the inverse-variance solution against the Cramer-Rao
bound by Monte Carlo.
"""

import numpy as np

from leopos.baselines import inverse_variance_weights, sinr_proportional_weights, uniform_weights
from leopos.estimator import crlb_position, wls_solve
from leopos.measurement import noise_sigma

rng = np.random.default_rng(1)

# A ring of beams around the UT keeps the geometry benign.
ang = np.deg2rad(np.arange(10) * 36.0 + 7.0)
centers = 500.0 + 300.0 * np.c_[np.cos(ang), np.sin(ang)]
ut, bias = np.array([540.0, 460.0]), 42.0
q = np.linspace(1.0, 0.3, 10)
sig = noise_sigma(q)
truth = np.linalg.norm(centers - ut, axis=1) + bias

schemes = {
    "uniform": uniform_weights(10),
    "sinr": sinr_proportional_weights(q),
    "inverse-variance": inverse_variance_weights(sig),
}
n = 3000
for name, w in schemes.items():
    sq = np.empty(n)
    for k in range(n):
        z = truth + rng.normal(0.0, sig)
        sq[k] = np.sum((wls_solve(z, centers, w, (500.0, 500.0)).position - ut) ** 2)
    print(f"{name:>17s}: RMSE {np.sqrt(sq.mean()):7.3f} m")

# The inverse-variance weights are the Gaussian ML weighting, so their
# error should sit on the bound.
print(f"{'CRLB':>17s}: RMSE {np.sqrt(crlb_position(centers, ut, sig)):7.3f} m")
