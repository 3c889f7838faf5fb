"""
Boson sampling heralded by entangled partners
=============================================

Alice photon-counts her halves of the squeezed pairs; each count pattern
heralds Bob's input Fock state. Bob's output counts should follow permanents
of submatrices of L.
"""

import numpy as np

from su11 import fock
from su11 import plon

# Hong-Ou-Mandel on a balanced beamsplitter: two photons never exit separately
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
print("P(1,1 | 1,1) =", round(fock.boson_sampling_prob(H, [0, 1], [1, 1]), 15))
runs = plon.sample_runs(H, 0.8, plon.SAMPLING, 100_000, rng=3)
pair = (runs.alice == 1).all(axis=1)
print(f"sampled: {pair.sum()} heralded pairs, {(runs.bob[pair] == 1).all(axis=1).sum()} coincidences")

# Three modes through a random lossy network
L = plon.random_transfer_matrix(3, np.random.default_rng(5))
runs = plon.sample_runs(L, 0.7, plon.SAMPLING, 200_000, rng=4)
print(f"\nfraction of runs simulated exactly: {runs.simulated.mean():.3f}")
report = plon.validate_sampling_runs(runs, L, 0.7)
for pat in report["patterns"]:
    print(f"Alice {pat['pattern']}: {pat['runs']:>6} runs, chi-square p = {pat['p_value']:.3f}")
print("all patterns consistent with permanents:", report["passed"])
