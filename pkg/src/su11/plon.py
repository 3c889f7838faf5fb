"""In-situ characterization of a lossy passive linear-optical network (pLON).

Alice and Bob share M two-mode squeezed-vacuum pairs; Bob's modes cross the
network. In a *characterization* run Alice heterodynes and Bob counts photons;
in a *sampling* run both count photons, which makes Bob's record a randomized
boson-sampling instance.

Column estimator. Alice's outcomes are ``alpha ~ CN(0, cosh^2 r I)`` and Bob's
mode i is coherent with amplitude ``-tanh r (alpha^* L)_i``, so

    P(n_i = 0 | alpha) = exp(-tanh^2 r |L_i^H alpha|^2).

Conditioned on that vacuum event, ``alpha`` is complex Gaussian with Hermitian
second moment ``Gamma_i = E[alpha alpha^H] = (cosh^-2 r I + tanh^2 r L_i L_i^H)^-1``.
Its smallest eigenvector points along ``L_i`` and its eigenvalue ``lam`` gives
``|L_i|^2 = (1/lam - cosh^-2 r) / tanh^2 r``. The heterodyne half quantum is
already inside ``cosh^2 r``, so no further offset enters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np
from scipy import stats

from . import gaussian as g
from .fock import boson_sampling_prob, output_distribution
from .measurement import heterodyne
from .rng import as_streams, run_blocks

__all__ = [
    "RunRecord",
    "RunRecords",
    "ColumnEstimate",
    "Reconstruction",
    "InsufficientSamplesError",
    "check_transfer_matrix",
    "random_transfer_matrix",
    "entangled_pairs",
    "sample_run",
    "sample_runs",
    "conditional_second_moment",
    "norm_from_eigenvalue",
    "estimate_column",
    "reconstruct",
    "canonical_phase",
    "column_fidelity",
    "validate_sampling_runs",
    "alice_marginal_variance",
    "bob_mean_counts",
    "write_records",
    "read_records",
]

CHARACTERIZATION = "characterization"
SAMPLING = "sampling"
UNSIMULATED = -1


class InsufficientSamplesError(ValueError):
    pass


def check_transfer_matrix(L) -> np.ndarray:
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("transfer matrix must be square")
    if np.linalg.svd(L, compute_uv=False).max() > 1 + 1e-10:
        raise ValueError("transfer matrix is not sub-unitary")
    return L


def random_transfer_matrix(M: int, rng: np.random.Generator, low: float = 0.5, high: float = 1.0) -> np.ndarray:
    """Haar unitary times a diagonal of column transmission amplitudes in ``[low, high]``."""
    U = stats.unitary_group.rvs(M, random_state=rng) if M > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
    return U @ np.diag(rng.uniform(low, high, M))


@dataclass(frozen=True)
class RunRecord:
    run_type: str
    alice: np.ndarray
    bob: np.ndarray


@dataclass
class RunRecords:
    """Columnar store of many runs of one type.

    ``alice`` is complex heterodyne amplitudes (characterization) or photon
    counts (sampling), shape ``(N, M)``. ``bob`` holds counts; rows of
    unsimulated sampling runs are filled with -1.
    """

    run_type: str
    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self):
        if self.run_type not in (CHARACTERIZATION, SAMPLING):
            raise ValueError(f"unknown run type {self.run_type!r}")
        if self.alice.shape != self.bob.shape:
            raise ValueError("alice and bob records must have the same shape")

    @property
    def num_modes(self) -> int:
        return self.alice.shape[1]

    @property
    def simulated(self) -> np.ndarray:
        return (self.bob >= 0).all(axis=1)

    def __len__(self):
        return self.alice.shape[0]

    def __getitem__(self, k) -> RunRecord:
        return RunRecord(self.run_type, self.alice[k], self.bob[k])

    @classmethod
    def concat(cls, parts) -> "RunRecords":
        parts = list(parts)
        return cls(parts[0].run_type, np.concatenate([p.alice for p in parts]), np.concatenate([p.bob for p in parts]))


def entangled_pairs(M: int, r: float) -> g.GaussianState:
    """M two-mode squeezed vacua: Alice's modes ``0..M-1``, Bob's partners ``M..2M-1``."""
    state = g.vacuum(2 * M)
    for j in range(M):
        state = g.squeeze2(state, j, M + j, r)
    return state


def _characterization_block(L, r, n, gen):
    M = L.shape[0]
    state = entangled_pairs(M, r).broadcast(n)
    alpha = np.empty((n, M), dtype=complex)
    for j in range(M):
        # heterodyne removes the measured mode, so Alice's next mode is always index 0
        out, state = heterodyne(state, 0, gen)
        alpha[:, j] = out.alpha
    beta_in = g.complex_amplitudes(state.mean)  # coherent, -alpha^* tanh r
    beta_out = beta_in @ L
    return alpha, gen.poisson(np.abs(beta_out) ** 2)


def _sampling_block(L, r, n, gen):
    M = L.shape[0]
    # Schmidt form: P(n) = tanh^{2n} r / cosh^2 r, i.e. geometric with success 1/cosh^2 r
    alice = gen.geometric(1.0 / np.cosh(r) ** 2, size=(n, M)) - 1
    bob = np.full((n, M), UNSIMULATED, dtype=int)
    ok = (alice <= 1).all(axis=1) & (alice.sum(axis=1) <= 3) if M <= 4 else np.zeros(n, bool)
    patterns, inverse = np.unique(alice[ok], axis=0, return_inverse=True)
    rows = np.flatnonzero(ok)
    for k, pattern in enumerate(patterns):
        sel = rows[np.ravel(inverse) == k]
        dist = output_distribution(L, np.flatnonzero(pattern))
        outs = list(dist)
        probs = np.array([dist[o] for o in outs])
        pick = gen.choice(len(outs), size=sel.size, p=probs / probs.sum())
        bob[sel] = np.array(outs, dtype=int)[pick]
    return alice, bob


def sample_runs(L, r: float, run_type: str, n: int, rng, workers=None) -> RunRecords:
    """Simulate ``n`` runs of the given type.

    Characterization runs use the Gaussian engine: Alice's heterodynes condition
    Bob's inputs to coherent states, which cross the network and are
    photocounted. Sampling runs draw Alice's counts from the Schmidt
    distribution and Bob's output from the exact Fock-space expansion; runs with
    more than one photon in an Alice mode, more than three photons, or ``M > 4``
    are kept with Bob's counts set to -1.
    """
    L = check_transfer_matrix(L)
    if not r > 0:
        raise ValueError("squeeze parameter must be positive")
    block = {CHARACTERIZATION: _characterization_block, SAMPLING: _sampling_block}[run_type]
    parts = run_blocks(lambda k, step_rng: block(L, r, k, step_rng(0)), n, as_streams(rng), workers)
    return RunRecords(run_type, np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def sample_run(L, r: float, run_type: str, rng) -> RunRecord:
    return sample_runs(L, r, run_type, 1, rng)[0]


def conditional_second_moment(L, i: int, r: float) -> np.ndarray:
    """``E[alpha alpha^H | Bob counts 0 in mode i]`` from Gaussian conditioning."""
    L = np.asarray(L, dtype=complex)
    col = L[:, i][:, None]
    M = L.shape[0]
    precision = np.eye(M) / np.cosh(r) ** 2 + np.tanh(r) ** 2 * (col @ col.conj().T)
    return np.linalg.inv(precision)


def norm_from_eigenvalue(lam, r: float):
    return (1.0 / np.asarray(lam) - 1.0 / np.cosh(r) ** 2) / np.tanh(r) ** 2


@dataclass
class ColumnEstimate:
    direction: np.ndarray
    norm_sq: float
    samples_used: int
    eigenvalues: np.ndarray
    ill_conditioned: bool
    fidelity_to_truth: float | None = None

    @property
    def column(self) -> np.ndarray:
        return self.direction * np.sqrt(max(self.norm_sq, 0.0))


def estimate_column(records: RunRecords, i: int, r: float, min_samples: int = 1000, gap_factor: float = 4.0) -> ColumnEstimate:
    """Estimate column ``i`` from Alice's outcomes on runs where Bob saw vacuum in mode ``i``.

    The column is flagged ill-conditioned when the gap between the two smallest
    eigenvalues is below ``gap_factor * cosh^2 r * sqrt(M / N)``, the scale of
    sampling fluctuations of the eigenvalues.
    """
    if records.run_type != CHARACTERIZATION:
        raise ValueError("column estimation needs characterization runs")
    alpha = records.alice[records.bob[:, i] == 0]
    N, M = alpha.shape
    if N < min_samples:
        raise InsufficientSamplesError(f"only {N} vacuum-conditioned runs for column {i}")
    gamma = alpha.T @ alpha.conj() / N
    w, v = np.linalg.eigh(gamma)
    direction = v[:, 0]
    gap = w[1] - w[0] if M > 1 else np.inf
    threshold = gap_factor * np.cosh(r) ** 2 * np.sqrt(M / N)
    norm_sq = max(float(norm_from_eigenvalue(w[0], r)), 0.0)
    return ColumnEstimate(direction, norm_sq, N, w, bool(gap < threshold))


def canonical_phase(L) -> np.ndarray:
    """Rotate every column so its largest-modulus entry is real and positive."""
    L = np.array(L, dtype=complex)
    for i in range(L.shape[1]):
        k = np.argmax(np.abs(L[:, i]))
        if abs(L[k, i]) > 0:
            L[:, i] *= np.exp(-1j * np.angle(L[k, i]))
    return L


def column_fidelity(L_hat, L) -> np.ndarray:
    """``|<L_hat_i, L_i>| / (|L_hat_i| |L_i|)`` per column."""
    L_hat, L = np.asarray(L_hat), np.asarray(L)
    overlap = np.abs(np.einsum("ji,ji->i", L_hat.conj(), L))
    return overlap / (np.linalg.norm(L_hat, axis=0) * np.linalg.norm(L, axis=0))


@dataclass
class Reconstruction:
    L_hat: np.ndarray
    columns: list
    settings: dict = field(default_factory=dict)

    @property
    def fidelities(self):
        return [c.fidelity_to_truth for c in self.columns]

    def to_dict(self) -> dict:
        return {
            "L_hat": [[[z.real, z.imag] for z in row] for row in self.L_hat],
            "per_column": [
                {"fidelity": c.fidelity_to_truth, "norm_sq": c.norm_sq, "samples_used": c.samples_used,
                 "ill_conditioned": c.ill_conditioned}
                for c in self.columns
            ],
            "settings": self.settings,
        }


def reconstruct(records: RunRecords, r: float, truth=None, strict: bool = True, **kwargs) -> Reconstruction:
    """Assemble the transfer-matrix estimate column by column, canonical phases applied.

    With ``truth`` each column also gets its fidelity to the planted matrix.
    ``strict`` raises if any column is ill-conditioned.
    """
    M = records.num_modes
    cols = [estimate_column(records, i, r, **kwargs) for i in range(M)]
    bad = [i for i, c in enumerate(cols) if c.ill_conditioned]
    if strict and bad:
        raise ValueError(f"ill-conditioned columns: {bad}")
    L_hat = canonical_phase(np.stack([c.column for c in cols], axis=1))
    if truth is not None:
        fid = column_fidelity(L_hat, truth)
        for c, f in zip(cols, fid):
            c.fidelity_to_truth = float(f)
    return Reconstruction(L_hat, cols, {"M": M, "r": r, "runs": len(records)})


def _bob_patterns(M: int, n: int):
    from itertools import product

    return [t for t in product(range(n + 1), repeat=M) if sum(t) <= n]


def validate_sampling_runs(records: RunRecords, L, r: float, alpha: float = 0.01, min_runs: int = 50) -> dict:
    """Chi-square test of Bob's counts against permanent-based probabilities, per Alice pattern.

    Outcomes of zero probability must never occur. Bins with expected count below
    5 are pooled. Patterns with fewer than ``min_runs`` runs are skipped.
    """
    if records.run_type != SAMPLING:
        raise ValueError("validation needs sampling runs")
    L = check_transfer_matrix(L)
    M = L.shape[0]
    sim = records.simulated
    alice, bob = records.alice[sim], records.bob[sim]
    results = []
    for pattern in np.unique(alice, axis=0):
        sel = (alice == pattern).all(axis=1)
        count = int(sel.sum())
        if count < min_runs:
            continue
        n = int(pattern.sum())
        outs = _bob_patterns(M, n)
        probs = np.array([boson_sampling_prob(L, np.flatnonzero(pattern), t) for t in outs])
        lookup = {t: k for k, t in enumerate(outs)}
        observed = np.zeros(len(outs))
        for row in map(tuple, bob[sel]):
            observed[lookup[row]] += 1
        forbidden = probs < 1e-12
        hits = int(observed[forbidden].sum())
        expected = probs * count
        big = (expected >= 5) & ~forbidden
        small = ~big & ~forbidden
        obs = list(observed[big]) + ([observed[small].sum()] if small.any() else [])
        exp = list(expected[big]) + ([expected[small].sum()] if small.any() else [])
        p = float(stats.chisquare(obs, exp).pvalue) if len(obs) > 1 else 1.0
        results.append({
            "pattern": pattern.tolist(), "runs": count, "p_value": p, "forbidden_hits": hits,
            "passed": bool(p > alpha and hits == 0),
            "frequencies": {str(t): observed[k] / count for k, t in enumerate(outs)},
            "probabilities": {str(t): probs[k] for k, t in enumerate(outs)},
        })
    return {"passed": all(r_["passed"] for r_ in results), "patterns": results}


def alice_marginal_variance(records: RunRecords) -> np.ndarray:
    """Per-mode quadrature variance of Alice's heterodyne outcomes (x and p pooled)."""
    a = records.alice * np.sqrt(2)
    return 0.5 * (a.real.var(axis=0, ddof=1) + a.imag.var(axis=0, ddof=1))


def bob_mean_counts(records: RunRecords) -> np.ndarray:
    bob = records.bob[records.simulated]
    return bob.mean(axis=0)


def write_records(path, records: RunRecords, header: dict) -> None:
    """JSON lines: a header object, then one run per line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"header": header}) + "\n")
        for k in range(len(records)):
            rec = records[k]
            alice = ([[z.real, z.imag] for z in rec.alice] if records.run_type == CHARACTERIZATION
                     else rec.alice.tolist())
            fh.write(json.dumps({"run_type": rec.run_type, "alice": alice, "bob": rec.bob.tolist()}) + "\n")


def read_records(path):
    """Inverse of :func:`write_records`; returns ``(header, RunRecords)``."""
    with open(path) as fh:
        header = json.loads(fh.readline())["header"]
        rows = [json.loads(line) for line in fh if line.strip()]
    run_type = rows[0]["run_type"] if rows else header.get("run_type", CHARACTERIZATION)
    if run_type == CHARACTERIZATION:
        alice = np.array([[complex(re, im) for re, im in row["alice"]] for row in rows])
    else:
        alice = np.array([row["alice"] for row in rows], dtype=int)
    bob = np.array([row["bob"] for row in rows], dtype=int)
    return header, RunRecords(run_type, alice, bob)
