"""Truncated Fock-space oracle.

Dense matrices for ladder operators, the SU(2) and SU(1,1) generators, unitaries
by matrix exponential, quadrature moments of Fock states, and exact
small-instance boson-sampling probabilities. Nothing here shares code with the
Gaussian engine; tests use it as the independent side of every comparison.

Truncation keeps ``cutoff + 1`` levels per mode. Operators that raise photon
number are wrong on the top levels, so algebraic identities are checked on the
*interior* subspace of basis states with total photon number at most
``cutoff - 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np
from scipy.linalg import expm

__all__ = [
    "FockOperator",
    "FockState",
    "annihilators",
    "build_generators",
    "commutator",
    "interior_indices",
    "expm_unitary",
    "vacuum_state",
    "coherent_state",
    "squeeze1_generator",
    "displacement_generator",
    "beamsplitter_generator",
    "phase_generator",
    "oracle_moments",
    "expectation",
    "permanent",
    "dilate",
    "boson_sampling_prob",
    "output_distribution",
]

TAIL_TOL = 1e-8


@dataclass(frozen=True)
class FockOperator:
    modes: int
    cutoff: int
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        dim = (self.cutoff + 1) ** self.modes
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {self.matrix.shape}")
        if self.hermitian and np.abs(self.matrix - self.matrix.conj().T).max() > 1e-10:
            raise ValueError("operator flagged Hermitian is not")

    def __matmul__(self, other):
        if isinstance(other, FockState):
            return FockState(self.modes, self.cutoff, self.matrix @ other.amplitudes)
        return FockOperator(self.modes, self.cutoff, self.matrix @ other.matrix)

    @property
    def dag(self) -> "FockOperator":
        return FockOperator(self.modes, self.cutoff, self.matrix.conj().T, self.hermitian)


@dataclass(frozen=True)
class FockState:
    modes: int
    cutoff: int
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def tail_mass(self) -> float:
        """Probability on basis states where some mode sits in its top two levels."""
        occ = _occupations(self.modes, self.cutoff)
        top = (occ >= self.cutoff - 1).any(axis=1)
        return float(np.sum(np.abs(self.amplitudes[top]) ** 2))

    def fidelity(self, other: "FockState") -> float:
        return float(np.abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@lru_cache(maxsize=None)
def _occupations(modes: int, cutoff: int) -> np.ndarray:
    return np.array(list(product(range(cutoff + 1), repeat=modes)), dtype=int)


def annihilators(modes: int, cutoff: int) -> list:
    """Dense annihilation operators ``[a_1, ..., a_M]`` on the truncated space."""
    a1 = np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(complex)
    eye = np.eye(cutoff + 1)
    ops = []
    for m in range(modes):
        factors = [a1 if k == m else eye for k in range(modes)]
        mat = factors[0]
        for f in factors[1:]:
            mat = np.kron(mat, f)
        ops.append(mat)
    return ops


def interior_indices(modes: int, cutoff: int, margin: int = 2) -> np.ndarray:
    """Basis indices with total photon number <= ``cutoff - margin``."""
    return np.flatnonzero(_occupations(modes, cutoff).sum(axis=1) <= cutoff - margin)


def commutator(A: FockOperator, B: FockOperator) -> FockOperator:
    return FockOperator(A.modes, A.cutoff, A.matrix @ B.matrix - B.matrix @ A.matrix)


@lru_cache(maxsize=8)
def build_generators(cutoff: int) -> dict:
    """Schwinger operators J_1..J_3 and SU(1,1) generators K_0..K_2 for two modes.

    ``K_0`` keeps its zero-point constant: ``K_0 = (a^dag a + b b^dag)/2``.
    Results are cached; treat the matrices as read-only.
    """
    if cutoff < 4:
        raise ValueError("cutoff must be at least 4")
    a, b = annihilators(2, cutoff)
    ad, bd = a.conj().T, b.conj().T
    eye = np.eye(a.shape[0])
    mats = {
        "J1": 0.5 * (ad @ b + a @ bd),
        "J2": -0.5j * (ad @ b - a @ bd),
        "J3": 0.5 * (ad @ a - bd @ b),
        # b b^dag = b^dag b + 1 exactly, avoiding truncation damage at the top level
        "K0": 0.5 * (ad @ a + bd @ b + eye),
        "K1": 0.5 * (a @ b + ad @ bd),
        "K2": 0.5j * (a @ b - ad @ bd),
    }
    for v in mats.values():
        v.flags.writeable = False
    return {k: FockOperator(2, cutoff, v, hermitian=True) for k, v in mats.items()}


def expm_unitary(generator: FockOperator, angle: float) -> FockOperator:
    """``exp(-i angle G)`` for a Hermitian generator ``G``."""
    if not np.isfinite(angle) or not np.all(np.isfinite(generator.matrix)):
        raise ValueError("non-finite generator or angle")
    G = generator.matrix
    d = np.diag(G)
    if not np.count_nonzero(G - np.diag(d)):
        return FockOperator(generator.modes, generator.cutoff, np.diag(np.exp(-1j * angle * d)))
    return FockOperator(generator.modes, generator.cutoff, expm(-1j * angle * G))


def squeeze1_generator(modes: int, cutoff: int, mode: int = 0) -> FockOperator:
    """``G = (x p + p x)/2``, so ``S_1(r) = exp(-i (-r) G)``."""
    a = annihilators(modes, cutoff)[mode]
    ad = a.conj().T
    # (xp + px)/2 = i (a^dag^2 - a^2)/2
    return FockOperator(modes, cutoff, 0.5j * (ad @ ad - a @ a), hermitian=True)


def displacement_generator(modes: int, cutoff: int, mode: int, gamma: complex) -> FockOperator:
    """``G`` with ``D(gamma) = exp(gamma a^dag - gamma^* a) = exp(-i G)``."""
    a = annihilators(modes, cutoff)[mode]
    return FockOperator(modes, cutoff, 1j * (gamma * a.conj().T - np.conj(gamma) * a), hermitian=True)


def beamsplitter_generator(cutoff: int) -> FockOperator:
    """``J_2``; the 50-50 beamsplitter is ``exp(-i J_2 pi/2)``."""
    return build_generators(cutoff)["J2"]


def phase_generator(modes: int, cutoff: int, mode: int) -> FockOperator:
    """``-a^dag a``, so ``exp(i theta n) = exp(-i theta G)``."""
    a = annihilators(modes, cutoff)[mode]
    return FockOperator(modes, cutoff, -(a.conj().T @ a), hermitian=True)


def vacuum_state(modes: int, cutoff: int) -> FockState:
    amps = np.zeros((cutoff + 1) ** modes, dtype=complex)
    amps[0] = 1.0
    return FockState(modes, cutoff, amps)


def coherent_state(alphas, cutoff: int) -> FockState:
    """Product coherent state from the closed-form Poisson amplitudes."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    n = np.arange(cutoff + 1)
    fact = np.array([float(factorial(k)) for k in n])
    vec = np.ones(1, dtype=complex)
    for al in alphas:
        single = np.exp(-0.5 * abs(al) ** 2) * al**n / np.sqrt(fact)
        vec = np.kron(vec, single)
    return FockState(alphas.size, cutoff, vec)


def expectation(state: FockState, op: np.ndarray) -> complex:
    return np.vdot(state.amplitudes, op @ state.amplitudes)


def oracle_moments(state: FockState, tail_tol: float = TAIL_TOL):
    """Quadrature mean vector and symmetrized covariance of a Fock state."""
    if state.tail_mass > tail_tol:
        raise ValueError(f"tail mass {state.tail_mass:.2e} exceeds {tail_tol:.0e}; raise the cutoff")
    quads = []
    for a in annihilators(state.modes, state.cutoff):
        ad = a.conj().T
        quads += [(a + ad) / np.sqrt(2), (a - ad) / (1j * np.sqrt(2))]
    psi = state.amplitudes / state.norm
    mean = np.array([np.vdot(psi, q @ psi).real for q in quads])
    n = len(quads)
    cov = np.empty((n, n))
    applied = [q @ psi for q in quads]
    for j in range(n):
        for k in range(j, n):
            # <{q_j, q_k}>/2 = Re <q_j psi | q_k psi> for Hermitian q
            cov[j, k] = cov[k, j] = np.vdot(applied[j], applied[k]).real - mean[j] * mean[k]
    return mean, cov


def permanent(A: np.ndarray) -> complex:
    """Ryser's inclusion-exclusion formula; intended for n <= 4."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for subset in range(1, 1 << n):
        cols = [j for j in range(n) if subset >> j & 1]
        total += (-1) ** len(cols) * np.prod(A[:, cols].sum(axis=1))
    return (-1) ** n * total


def _psd_sqrt(H: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(H)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def dilate(L: np.ndarray) -> np.ndarray:
    """Unitary ``2M x 2M`` embedding of a sub-unitary transfer matrix.

    Rows index input modes (``M`` network inputs then ``M`` ancillas), columns
    output modes, following the row-vector convention ``beta -> beta L``.
    """
    L = np.asarray(L, dtype=complex)
    M = L.shape[0]
    if L.shape != (M, M):
        raise ValueError("transfer matrix must be square")
    if np.linalg.svd(L, compute_uv=False).max() > 1 + 1e-10:
        raise ValueError("transfer matrix has a singular value above 1")
    eye = np.eye(M)
    return np.block([[L, _psd_sqrt(eye - L @ L.conj().T)], [_psd_sqrt(eye - L.conj().T @ L), -L.conj().T]])


def _check_sizes(L, inputs):
    M = np.asarray(L).shape[0]
    if M > 4 or sum(inputs) > 3:
        raise ValueError("boson sampling oracle limited to M <= 4 and at most 3 photons")
    if len(inputs) != M:
        raise ValueError("input occupation vector must have length M")


def _as_occupation(input_modes, M):
    occ = np.zeros(M, dtype=int)
    for m in input_modes:
        occ[m] += 1
    return occ


def boson_sampling_prob(L, input_modes, output_counts) -> float:
    """Probability of Bob's ``output_counts`` given single photons into ``input_modes``.

    Loss is modelled by the unitary dilation; ancilla outputs are summed over.
    ``input_modes`` lists the occupied input ports (repeats allowed).
    """
    L = np.asarray(L, dtype=complex)
    M = L.shape[0]
    s = _as_occupation(input_modes, M)
    _check_sizes(L, s)
    t = np.asarray(output_counts, dtype=int)
    n, lost = int(s.sum()), int(s.sum() - t.sum())
    if t.shape != (M,) or lost < 0 or (t < 0).any():
        return 0.0
    U = dilate(L)
    rows = np.repeat(np.arange(M), s)
    norm_in = np.prod([factorial(k) for k in s])
    prob = 0.0
    for anc in _compositions(lost, M):
        full = np.concatenate([t, anc])
        cols = np.repeat(np.arange(2 * M), full)
        sub = U[np.ix_(rows, cols)] if n else np.zeros((0, 0))
        prob += abs(permanent(sub)) ** 2 / (norm_in * np.prod([factorial(k) for k in full]))
    return float(prob)


def _compositions(total: int, parts: int):
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield np.array([total])
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield np.concatenate([[head], tail])


def output_distribution(L, input_modes) -> dict:
    """Bob's photocount distribution by direct expansion of the output state.

    Each input photon ``c_j^dag`` is replaced by ``sum_k U_jk d_k^dag`` over the
    dilated outputs; the resulting polynomial is expanded monomial by monomial
    and normalised with ``sqrt(prod t_k!)``. This path never forms a permanent.
    """
    L = np.asarray(L, dtype=complex)
    M = L.shape[0]
    s = _as_occupation(input_modes, M)
    U = dilate(L)
    poly = {tuple([0] * (2 * M)): 1.0 + 0j}
    for j in np.repeat(np.arange(M), s):
        nxt = {}
        for occ, amp in poly.items():
            for k in range(2 * M):
                if U[j, k] == 0:
                    continue
                o = list(occ)
                o[k] += 1
                nxt[tuple(o)] = nxt.get(tuple(o), 0) + amp * U[j, k]
        poly = nxt
    norm_in = np.prod([factorial(k) for k in s])
    dist = {}
    for occ, amp in poly.items():
        weight = np.prod([factorial(k) for k in occ]) / norm_in
        bob = occ[:M]
        dist[bob] = dist.get(bob, 0.0) + abs(amp) ** 2 * weight
    return dist
