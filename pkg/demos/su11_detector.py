"""
Two-mode squeezing as a displacement amplifier
==============================================

Squeeze two modes together, let a force displace them, then unsqueeze. The
combination gamma_a^* + gamma_b comes out amplified by e^r and its partner
gamma_a - gamma_b^* comes out de-amplified by e^{-r}. Reading the output with
a quantum-noise-limited EPR measurement gives sub-QNL displacement resolution.
"""

import numpy as np

from su11 import protocols as P

r = 0.5

# Deterministic means of the two EPR combinations at the output
for ga, gb in [(0.0, 0.2 - 0.1j), (0.2 + 0.1j, 0.2 + 0.1j), (np.conj(0.3 + 0.2j), 0.3 + 0.2j)]:
    means, _ = P.su11_output_epr(ga, gb, r)
    print(f"gamma_a={ga:.2f}, gamma_b={gb:.2f}: amplified {means.amplified:.4f}, "
          f"de-amplified {means.deamplified:.4f}")

# Sampled readout: the estimator variance drops from 1 to e^{-2r}
rep = P.run_su11_detector(0, np.sqrt(2) * (0.2 - 0.1j), r, sigma_sq=0.5, trials=100_000, rng=11)
print(f"\nestimator variances {np.round(rep.empirical_variance, 4)}, expected e^-2r = {np.exp(-2 * r):.4f}")
print(f"gamma estimate {np.round(rep.extras['gamma_estimate'], 4)}")

# The second squeezer can be dropped if the EPR readout itself has
# resolution e^{-2r}/2; the statistics are the same
epr = P.run_epr_measurement_only(0.2 - 0.1j, r, trials=100_000, rng=12)
for k, name in enumerate(("sum x", "difference p")):
    ok, p = P.ks_equivalent(epr.extras["raw_outcomes"][:, k], rep.extras["raw_outcomes"][:, k])
    print(f"measurement-only vs full detector, {name}: KS p = {p:.3f}")

# A common phase shift of both arms produces no first-order signal in K0
const, lin, quad, _ = P.phase_probe_fit(r)
print(f"\n<K0>(phi) = {const:.4f} + {lin:.1e} phi + {quad:.4f} phi^2")
