"""
Characterizing a lossy network with entangled partners
======================================================

Alice keeps one half of M two-mode squeezed vacua and heterodynes them; Bob
sends the partners through an unknown lossy network L and counts photons.
Conditioned on Bob seeing vacuum in output i, Alice's outcomes are squeezed
along column i of L, which the smallest eigenvector of their second moment
recovers up to a phase.
"""

import numpy as np

from su11 import plon

M = 4
r = float(np.arcsinh(np.sqrt(0.5)))
L = plon.random_transfer_matrix(M, np.random.default_rng(2024))
print("planted singular values", np.round(np.linalg.svd(L, compute_uv=False), 3))

records = plon.sample_runs(L, r, plon.CHARACTERIZATION, 1_000_000, rng=1)
rec = plon.reconstruct(records, r, truth=L)

print("\ncolumn fidelities", np.round(rec.fidelities, 5))
print("estimated |L_i|^2", np.round([c.norm_sq for c in rec.columns], 4))
print("true      |L_i|^2", np.round(np.linalg.norm(L, axis=0) ** 2, 4))
print("\nreconstruction, phases fixed per column")
print(np.round(rec.L_hat, 3))

# Second moment conditioned on Bob's vacuum, model vs data, column 0
a = records.alice[records.bob[:, 0] == 0]
print("\nconditional second moment, data")
print(np.round(a.T @ a.conj() / len(a), 3))
print("model")
print(np.round(plon.conditional_second_moment(L, 0, r), 3))

# A blocked output cannot be characterized; the estimator says so
blocked = L @ np.diag([1, 1, 1, 0])
est = plon.estimate_column(plon.sample_runs(blocked, r, plon.CHARACTERIZATION, 200_000, rng=2), 3, r)
print(f"\nblocked column flagged ill-conditioned: {est.ill_conditioned}, |L_3|^2 estimate {est.norm_sq:.4f}")
