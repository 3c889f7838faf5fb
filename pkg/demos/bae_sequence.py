"""
Repeated back-action-evading position measurements
==================================================

A single mode is measured in x over and over. Each measurement narrows the
x-distribution and kicks p, but p never feeds back into x, so the estimator
x_n - x_{n-1} resolves a displacement with noise sqrt(2) sigma regardless of n.
"""

import numpy as np

from su11 import protocols as P

# Measurement resolution sigma^2 and prior variance Sigma_0^2
sigma_sq, prior = 0.125, 0.5

# The posterior variance shrinks like sigma^2 / (n + sigma^2 / Sigma_0^2)
n = np.arange(1, 11)
print("posterior x-variance after n measurements")
print(np.round(P.posterior_variance(sigma_sq, prior, n), 5))

# Now simulate: a kick of gamma_1 = 0.1 lands between rounds 4 and 5
cfg = P.BaeSequenceConfig(sigma_sq, prior, P.impulse(10, 5, 0.1), rounds=10, trials=100_000)
rep = P.run_bae_homodyne(cfg, rng=2024)

print("\nestimator means per round (the kick shows up in round 5 only)")
print(np.round(rep.estimates, 4))
print(f"\nestimator variance {rep.empirical_variance:.4f}, expected 2 sigma^2 = {2 * sigma_sq}")
print(f"z-score {rep.z_score:+.2f}")

# Outcomes are correlated through the shared initial x: Cov(x_j, x_k) = sigma^2 delta_jk + Sigma_0^2
drift = np.cumsum(np.sqrt(2) * cfg.displacements.real)
emp, model, z = P.outcome_covariance(rep.extras["outcomes"] - drift, sigma_sq, prior)
print("\nempirical outcome covariance, first 4 rounds")
print(np.round(emp[:4, :4], 3))

# Squeezing before the measurement and unsqueezing after it turns a
# quantum-noise-limited homodyne into one with resolution e^{-2r}/2
r = np.log(2)
sq = P.run_squeeze_enhanced(P.BaeSequenceConfig(0.5, prior, cfg.displacements, 10, 100_000), r, rng=7)
print(f"\nsqueeze-conjugated readout, r = ln 2: variance {sq.empirical_variance:.4f}, "
      f"expected {sq.analytic_variance:.4f}")
