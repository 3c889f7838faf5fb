"""Gaussian states and the unitary Gaussian operations of the SU(1,1) toolkit.

Conventions: hbar = 1, ``a = (x + i p)/sqrt(2)``, quadratures ordered
``(x_1, p_1, ..., x_M, p_M)``. Vacuum has covariance ``I/2``.

Every unitary is stored as the affine Heisenberg map it induces on the
quadrature vector, ``U^dag r U = S r + d``. In this form the Schrödinger mean
transforms as ``mu -> S mu + d`` and the covariance as ``V -> S V S^T``, and
"apply V then U" is plain function composition ``U_map(V_map(.))``.

A :class:`GaussianState` may carry a *batch* of mean vectors sharing one
covariance matrix. Conditioning on homodyne or heterodyne outcomes changes only
the mean, so whole Monte-Carlo ensembles are propagated at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidStateError",
    "GaussianState",
    "SymplecticOp",
    "EprVariables",
    "QuadraticMoments",
    "symplectic_form",
    "symplectic_eigenvalues",
    "vacuum",
    "coherent",
    "thermal",
    "displace",
    "squeeze1",
    "squeeze2",
    "beamsplit",
    "rotate",
    "displacement_op",
    "squeeze1_op",
    "squeeze2_op",
    "beamsplitter_op",
    "rotation_op",
    "identity_op",
    "epr_variables",
    "quadratic_moments",
    "complex_amplitudes",
]

SYMMETRY_TOL = 1e-12
VALIDITY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-12


class InvalidStateError(ValueError):
    """Raised when a covariance matrix violates the uncertainty principle."""


def symplectic_form(num_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for xpxp ordering."""
    return np.kron(np.eye(num_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, ascending."""
    n = cov.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    # eigenvalues of i*Omega*V come in +/- pairs
    return np.sort(ev)[::2]


def _check_mode(num_modes: int, *modes: int) -> None:
    for m in modes:
        if not 0 <= m < num_modes:
            raise IndexError(f"mode {m} out of range for {num_modes}-mode state")
    if len(set(modes)) != len(modes):
        raise ValueError(f"modes must be distinct, got {modes}")


@dataclass(frozen=True)
class GaussianState:
    """Mean vector(s) and covariance of an M-mode Gaussian state.

    ``mean`` has shape ``(2M,)`` or ``(batch, 2M)``; ``cov`` is ``(2M, 2M)``.
    """

    mean: np.ndarray
    cov: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square with even size, got {cov.shape}")
        if mean.shape[-1] != cov.shape[0]:
            raise ValueError(f"mean length {mean.shape[-1]} does not match covariance {cov.shape}")
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * max(1.0, np.abs(cov).max()):
            raise InvalidStateError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if self.validate:
            nu = symplectic_eigenvalues(cov)
            if nu.min() < 0.5 - VALIDITY_TOL:
                raise InvalidStateError(
                    f"smallest symplectic eigenvalue {nu.min():.3e} is below 1/2"
                )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def num_modes(self) -> int:
        return self.cov.shape[0] // 2

    @property
    def batch_shape(self) -> tuple:
        return self.mean.shape[:-1]

    @property
    def purity(self) -> float:
        return 1.0 / np.sqrt(np.linalg.det(2.0 * self.cov))

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def reduced(self, modes) -> "GaussianState":
        """Marginal state on ``modes`` (in the given order)."""
        idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
        return GaussianState(self.mean[..., idx], self.cov[np.ix_(idx, idx)])

    def mode_mean(self, mode: int) -> np.ndarray:
        return self.mean[..., 2 * mode : 2 * mode + 2]

    def mode_cov(self, mode: int) -> np.ndarray:
        return self.cov[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2]

    def with_mean(self, mean: np.ndarray) -> "GaussianState":
        return GaussianState(mean, self.cov, validate=False)

    def broadcast(self, batch: int) -> "GaussianState":
        """Copy the (unbatched) mean ``batch`` times."""
        mean = np.broadcast_to(self.mean, (batch, self.cov.shape[0])).copy()
        return GaussianState(mean, self.cov, validate=False)

    def tensor(self, other: "GaussianState") -> "GaussianState":
        """Product state ``self (x) other``; modes of ``other`` follow."""
        a, b = self.mean, other.mean
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a = np.broadcast_to(a, shape + a.shape[-1:])
        b = np.broadcast_to(b, shape + b.shape[-1:])
        mean = np.concatenate([a, b], axis=-1)
        n1, n2 = self.cov.shape[0], other.cov.shape[0]
        cov = np.zeros((n1 + n2, n1 + n2))
        cov[:n1, :n1] = self.cov
        cov[n1:, n1:] = other.cov
        return GaussianState(mean, cov)

    def insert_mode(self, mode: int, mean: np.ndarray, cov: np.ndarray) -> "GaussianState":
        """Insert an uncorrelated mode at position ``mode``."""
        n = self.cov.shape[0]
        k = 2 * mode
        order = list(range(k)) + [n, n + 1] + list(range(k, n))
        joined = self.tensor(GaussianState(mean, cov))
        return GaussianState(joined.mean[..., order], joined.cov[np.ix_(order, order)])


def vacuum(num_modes: int) -> GaussianState:
    """M-mode vacuum: zero mean, covariance I/2."""
    if num_modes < 1:
        raise ValueError("number of modes must be positive")
    return GaussianState(np.zeros(2 * num_modes), 0.5 * np.eye(2 * num_modes))


def complex_amplitudes(mean: np.ndarray) -> np.ndarray:
    """Complex amplitudes ``(x + i p)/sqrt(2)`` of every mode in a mean vector."""
    mean = np.asarray(mean)
    return (mean[..., 0::2] + 1j * mean[..., 1::2]) / np.sqrt(2)


def _quadratures(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=complex)
    out = np.empty(alpha.shape[:-1] + (2 * alpha.shape[-1],))
    out[..., 0::2] = np.sqrt(2) * alpha.real
    out[..., 1::2] = np.sqrt(2) * alpha.imag
    return out


def coherent(alphas) -> GaussianState:
    """Product coherent state with complex amplitudes ``alphas``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    return GaussianState(_quadratures(alphas), 0.5 * np.eye(2 * alphas.shape[-1]))


def thermal(nbar) -> GaussianState:
    """Product thermal state, quadrature variance ``nbar + 1/2`` per mode."""
    nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
    return GaussianState(np.zeros(2 * nbar.size), np.diag(np.repeat(nbar + 0.5, 2)))


@dataclass(frozen=True)
class SymplecticOp:
    """Affine phase-space map ``r -> matrix @ r + shift``."""

    matrix: np.ndarray
    shift: np.ndarray = None

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=float)
        n = S.shape[0]
        shift = np.zeros(n) if self.shift is None else np.asarray(self.shift, dtype=float)
        if S.shape != (n, n) or n % 2 or shift.shape != (n,):
            raise ValueError("matrix must be 2M x 2M and shift of length 2M")
        object.__setattr__(self, "matrix", S)
        object.__setattr__(self, "shift", shift)

    @property
    def num_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        om = symplectic_form(self.num_modes)
        return bool(np.abs(self.matrix @ om @ self.matrix.T - om).max() <= tol)

    def __matmul__(self, other: "SymplecticOp") -> "SymplecticOp":
        # (self @ other) applies ``other`` first
        return SymplecticOp(self.matrix @ other.matrix, self.matrix @ other.shift + self.shift)

    def inverse(self) -> "SymplecticOp":
        inv = np.linalg.inv(self.matrix)
        return SymplecticOp(inv, -inv @ self.shift)

    def __call__(self, state: GaussianState) -> GaussianState:
        if state.num_modes != self.num_modes:
            raise ValueError(f"op acts on {self.num_modes} modes, state has {state.num_modes}")
        S = self.matrix
        return GaussianState(state.mean @ S.T + self.shift, S @ state.cov @ S.T)


def identity_op(num_modes: int) -> SymplecticOp:
    return SymplecticOp(np.eye(2 * num_modes))


def _embed(num_modes: int, modes, block: np.ndarray) -> np.ndarray:
    S = np.eye(2 * num_modes)
    idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
    S[np.ix_(idx, idx)] = block
    return S


def displacement_op(num_modes: int, mode: int, gamma: complex) -> SymplecticOp:
    """D(gamma): shifts (x, p) of ``mode`` by ``sqrt(2) (Re gamma, Im gamma)``."""
    _check_mode(num_modes, mode)
    d = np.zeros(2 * num_modes)
    d[2 * mode : 2 * mode + 2] = _quadratures([gamma])
    return SymplecticOp(np.eye(2 * num_modes), d)


def squeeze1_op(num_modes: int, mode: int, r: float) -> SymplecticOp:
    """S_1(r) = exp[r(a^2 - a^dag^2)/2]: x -> x e^{-r}, p -> p e^{r}."""
    _check_mode(num_modes, mode)
    if not np.isfinite(r):
        raise ValueError("squeeze parameter must be finite")
    return SymplecticOp(_embed(num_modes, [mode], np.diag([np.exp(-r), np.exp(r)])))


def squeeze2_op(num_modes: int, mode_a: int, mode_b: int, r: float) -> SymplecticOp:
    """S_2(r) = exp[r(ab - a^dag b^dag)]: a -> a cosh r - b^dag sinh r."""
    _check_mode(num_modes, mode_a, mode_b)
    c, s = np.cosh(r), np.sinh(r)
    Z = np.diag([1.0, -1.0])
    block = np.block([[c * np.eye(2), -s * Z], [-s * Z, c * np.eye(2)]])
    return SymplecticOp(_embed(num_modes, [mode_a, mode_b], block))


def beamsplitter_op(num_modes: int, mode_a: int, mode_b: int) -> SymplecticOp:
    """50-50 beamsplitter exp(-i J_2 pi/2): a -> (a - b)/sqrt2, b -> (a + b)/sqrt2."""
    _check_mode(num_modes, mode_a, mode_b)
    h = np.sqrt(0.5) * np.eye(2)
    return SymplecticOp(_embed(num_modes, [mode_a, mode_b], np.block([[h, -h], [h, h]])))


def rotation_op(num_modes: int, mode: int, theta: float) -> SymplecticOp:
    """Phase shift exp(i theta a^dag a): a -> a e^{i theta}."""
    _check_mode(num_modes, mode)
    c, s = np.cos(theta), np.sin(theta)
    return SymplecticOp(_embed(num_modes, [mode], np.array([[c, -s], [s, c]])))


def displace(state: GaussianState, mode: int, gamma: complex) -> GaussianState:
    return displacement_op(state.num_modes, mode, gamma)(state)


def squeeze1(state: GaussianState, mode: int, r: float) -> GaussianState:
    return squeeze1_op(state.num_modes, mode, r)(state)


def squeeze2(state: GaussianState, mode_a: int, mode_b: int, r: float) -> GaussianState:
    return squeeze2_op(state.num_modes, mode_a, mode_b, r)(state)


def beamsplit(state: GaussianState, mode_a: int, mode_b: int) -> GaussianState:
    return beamsplitter_op(state.num_modes, mode_a, mode_b)(state)


def rotate(state: GaussianState, mode: int, theta: float) -> GaussianState:
    return rotation_op(state.num_modes, mode, theta)(state)


_SQ = np.sqrt(0.5)
# rows: (x_a+x_b)/√2, (-p_a+p_b)/√2, (x_a-x_b)/√2, (p_a+p_b)/√2
EPR_MATRIX = _SQ * np.array(
    [
        [1.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
    ]
)


@dataclass(frozen=True)
class EprVariables:
    """The four EPR combinations of a mode pair.

    ``sum_x + i diff_p`` is the real/imaginary split of ``a^dag + b``;
    ``diff_x + i sum_p`` that of ``a - b^dag``.
    """

    sum_x: float
    diff_p: float
    diff_x: float
    sum_p: float

    @classmethod
    def from_quadratures(cls, xa, pa, xb, pb) -> "EprVariables":
        v = EPR_MATRIX @ np.array([xa, pa, xb, pb])
        return cls(*v)

    def to_quadratures(self) -> np.ndarray:
        """Back to ``(x_a, p_a, x_b, p_b)``; the EPR matrix is orthogonal."""
        return EPR_MATRIX.T @ np.array([self.sum_x, self.diff_p, self.diff_x, self.sum_p])

    @property
    def amplified(self) -> complex:
        """Value of ``a^dag + b``."""
        return complex(self.sum_x, self.diff_p)

    @property
    def deamplified(self) -> complex:
        """Value of ``a - b^dag``."""
        return complex(self.diff_x, self.sum_p)


def epr_variables(state: GaussianState, mode_a: int = 0, mode_b: int = 1):
    """Means and covariance of the EPR variables of a mode pair.

    Returns ``(EprVariables of means, 4x4 covariance)``; the covariance rows
    follow the field order of :class:`EprVariables`. Batched means are not
    supported here.
    """
    sub = state.reduced([mode_a, mode_b])
    if sub.batch_shape:
        raise ValueError("epr_variables expects an unbatched state")
    m = EPR_MATRIX @ sub.mean
    return EprVariables(*m), EPR_MATRIX @ sub.cov @ EPR_MATRIX.T


@dataclass(frozen=True)
class QuadraticMoments:
    j3x2_mean: float
    j3x2_var: float
    k0_mean: float


def _number_weights(coeffs) -> np.ndarray:
    return np.kron(np.diag(coeffs), 0.5 * np.eye(2))


def quadratic_moments(state: GaussianState) -> QuadraticMoments:
    """<2 J_3>, Var(2 J_3) and <K_0> of a two-mode state.

    Uses the Wigner-function moments of ``n_j = (x_j^2 + p_j^2 - 1)/2``. The
    Weyl symbol of ``n_j^2`` differs from the square of the symbol of ``n_j``
    by 1/4, which is removed per mode.
    """
    if state.num_modes != 2:
        raise ValueError("quadratic moments are defined for two-mode states")
    if state.batch_shape:
        raise ValueError("quadratic_moments expects an unbatched state")
    V, mu = state.cov, state.mean
    occupation = 0.5 * (np.diag(V)[0::2] + np.diag(V)[1::2] + mu[0::2] ** 2 + mu[1::2] ** 2 - 1.0)
    # 2 J_3 = n_a - n_b = r^T Q r + const
    Q = _number_weights([1.0, -1.0])
    var_w = 2.0 * np.trace(Q @ V @ Q @ V) + 4.0 * mu @ Q @ V @ Q @ mu
    var = var_w - 0.25 * 2
    return QuadraticMoments(
        j3x2_mean=float(occupation[0] - occupation[1]),
        j3x2_var=float(var),
        k0_mean=float(0.5 * (occupation.sum() + 1.0)),
    )
