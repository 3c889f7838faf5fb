"""Stochastic Gaussian measurements and the conditional states they leave.

All measurement types reduce to one operation: observe ``y = H r + noise`` with
``noise ~ N(0, R)``. The outcome is Normal(``H mu``, ``H V H^T + R``) and the
posterior follows the Schur-complement update

    K = V H^T (H V H^T + R)^-1,   mu' = mu + K (y - H mu),   V' = V - K H V.

A Gaussian Kraus operator ``exp[-(H r - y)^2 / 4 sigma^2]`` additionally
blurs the conjugate directions ``Omega H^T`` by ``1/(4 sigma^2)``: the back
action that keeps a pure state pure. Heterodyne detection is the case
``R = I/2`` on both quadratures of a mode, followed by removal of that mode,
so its back action never appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np

from .gaussian import GaussianState, _check_mode, squeeze1, symplectic_form

__all__ = [
    "HomodyneOutcome",
    "HeterodyneOutcome",
    "MeasurementRecord",
    "outcome_law",
    "condition",
    "homodyne_bae",
    "heterodyne",
    "squeezed_heterodyne",
    "epr_measure",
    "vacuum_condition",
    "photocount_coherent",
    "quadrature_row",
]


@dataclass(frozen=True)
class HomodyneOutcome:
    value: np.ndarray | float
    mode: int
    resolution_sq: float
    quadrature: str = "x"

    def __post_init__(self):
        if not self.resolution_sq > 0:
            raise ValueError("resolution_sq must be positive")


@dataclass(frozen=True)
class HeterodyneOutcome:
    """Heterodyne result as quadrature pair, ``alpha = (x + i p)/sqrt(2)``.

    For a squeezed-basis measurement ``squeeze`` holds r and ``rescaled`` gives
    the squeezed-basis amplitude components ``(x e^{-r}, p e^{r})``.
    """

    x: np.ndarray | float
    p: np.ndarray | float
    mode: int = 0
    squeeze: float = 0.0

    def __post_init__(self):
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise ValueError("heterodyne outcome must be finite")

    @property
    def alpha(self):
        return (np.asarray(self.x) + 1j * np.asarray(self.p)) / np.sqrt(2)

    @property
    def rescaled(self):
        return np.asarray(self.x) * np.exp(-self.squeeze), np.asarray(self.p) * np.exp(self.squeeze)


def quadrature_row(num_modes: int, mode: int, quadrature: str = "x") -> np.ndarray:
    row = np.zeros(2 * num_modes)
    row[2 * mode + {"x": 0, "p": 1}[quadrature]] = 1.0
    return row


def outcome_law(state: GaussianState, rows: np.ndarray, noise: np.ndarray):
    """Mean(s) and covariance of ``y = rows @ r + noise``."""
    H = np.atleast_2d(rows)
    return state.mean @ H.T, H @ state.cov @ H.T + np.atleast_2d(noise)


def condition(
    state: GaussianState, rows, noise, outcome, *, backaction: bool = True, validate: bool = True
) -> GaussianState:
    """Posterior state after observing ``outcome`` of ``rows @ r`` through ``noise``.

    ``rows`` must describe mutually commuting observables. ``outcome`` may carry
    a batch axis matching (or broadcasting against) the state's mean batch.
    With ``backaction`` the Kraus-operator blur ``Omega H^T (4R)^-1 H Omega^T``
    is added to the covariance.
    """
    H = np.atleast_2d(rows)
    R = np.atleast_2d(noise)
    V = state.cov
    S = H @ V @ H.T + R
    K = np.linalg.solve(S, H @ V).T
    y = np.asarray(outcome, dtype=float)
    innov = y - state.mean @ H.T
    mean = state.mean + innov @ K.T
    cov = V - K @ H @ V
    if backaction:
        om = symplectic_form(state.num_modes)
        if np.abs(H @ om @ H.T).max() > 1e-12:
            raise ValueError("jointly measured observables must commute")
        D = om @ H.T
        cov = cov + D @ np.linalg.solve(4.0 * R, D.T)
    return GaussianState(mean, 0.5 * (cov + cov.T), validate=validate)


def _sample(state: GaussianState, rows, noise, rng: np.random.Generator):
    mu, cov = outcome_law(state, rows, noise)
    L = np.linalg.cholesky(cov)
    z = rng.standard_normal(mu.shape)
    return mu + z @ L.T


def homodyne_bae(
    state: GaussianState,
    mode: int,
    sigma_sq: float,
    rng: np.random.Generator | None = None,
    *,
    quadrature: str = "x",
    outcome=None,
):
    """Finite-resolution quadrature measurement with Gaussian Kraus operators.

    The outcome is drawn from Normal(<x>, Var(x) + sigma_sq) (one draw per batch
    entry) unless ``outcome`` is given, in which case the state is conditioned
    on it. Returns ``(HomodyneOutcome, posterior)``.
    """
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive; projective limits are not supported")
    _check_mode(state.num_modes, mode)
    row = quadrature_row(state.num_modes, mode, quadrature)
    noise = np.array([[sigma_sq]])
    if outcome is None:
        y = _sample(state, row, noise, rng)
    else:
        y = np.asarray(outcome, dtype=float)[..., None]
    post = condition(state, row, noise, y)
    return HomodyneOutcome(y[..., 0], mode, sigma_sq, quadrature), post


def _project_out(state: GaussianState, mode: int, y) -> GaussianState:
    # the measured mode's own conditional block is not a state; drop it before validating
    rows = np.stack([quadrature_row(state.num_modes, mode, q) for q in "xp"])
    post = condition(state, rows, 0.5 * np.eye(2), y, backaction=False, validate=False)
    keep = [m for m in range(state.num_modes) if m != mode]
    return post.reduced(keep)


def heterodyne(state: GaussianState, mode: int, rng=None, *, outcome=None):
    """Coherent-state projection of ``mode``.

    Outcome ``(x, p)`` ~ Normal(mode mean, mode covariance + I/2). The measured
    mode is removed; the remaining ``M - 1`` modes keep their order.
    Returns ``(HeterodyneOutcome, posterior)``; posterior is ``None`` when the
    state had a single mode.
    """
    _check_mode(state.num_modes, mode)
    rows = np.stack([quadrature_row(state.num_modes, mode, q) for q in "xp"])
    noise = 0.5 * np.eye(2)
    y = _sample(state, rows, noise, rng) if outcome is None else np.asarray(outcome, dtype=float)
    result = HeterodyneOutcome(y[..., 0], y[..., 1], mode)
    if state.num_modes == 1:
        return result, None
    return result, _project_out(state, mode, y)


def squeezed_heterodyne(state: GaussianState, mode: int, r: float, rng=None, *, outcome=None):
    """Heterodyne conjugated by single-mode squeezing.

    Unsqueeze (``S_1(-r)``), project on a coherent state ``|alpha>``, and
    re-prepare ``S_1(r)|alpha>`` in place, i.e. the displaced squeezed state
    with mean ``(x e^{-r}, p e^{r})`` and covariance ``diag(e^{-2r}, e^{2r})/2``.
    The mode stays in the state.
    """
    res, rest = heterodyne(squeeze1(state, mode, -r), mode, rng, outcome=outcome)
    res = HeterodyneOutcome(res.x, res.p, mode, r)
    x_r, p_r = res.rescaled
    mean = np.stack(np.broadcast_arrays(x_r, p_r), axis=-1)
    cov = 0.5 * np.diag([np.exp(-2 * r), np.exp(2 * r)])
    if rest is None:
        return res, GaussianState(mean, cov)
    return res, rest.insert_mode(mode, mean, cov)


def epr_rows(num_modes: int, mode_a: int, mode_b: int) -> np.ndarray:
    """Observation rows for ``(x_a + x_b)/sqrt2`` and ``(-p_a + p_b)/sqrt2``."""
    rows = np.zeros((2, 2 * num_modes))
    h = np.sqrt(0.5)
    rows[0, 2 * mode_a] = rows[0, 2 * mode_b] = h
    rows[1, 2 * mode_a + 1], rows[1, 2 * mode_b + 1] = -h, h
    return rows


def epr_measure(state: GaussianState, mode_a: int, mode_b: int, sigma_sq: float, rng=None, *, outcome=None):
    """Joint measurement of the commuting EPR pair making up ``a^dag + b``.

    Both observables pass through independent Normal(0, sigma_sq) noise.
    Returns ``((sum_x outcome, diff_p outcome), posterior)``.
    """
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    _check_mode(state.num_modes, mode_a, mode_b)
    rows = epr_rows(state.num_modes, mode_a, mode_b)
    noise = sigma_sq * np.eye(2)
    y = _sample(state, rows, noise, rng) if outcome is None else np.asarray(outcome, dtype=float)
    outs = (
        HomodyneOutcome(y[..., 0], mode_a, sigma_sq, "sum_x"),
        HomodyneOutcome(y[..., 1], mode_b, sigma_sq, "diff_p"),
    )
    return outs, condition(state, rows, noise, y)


def vacuum_condition(state: GaussianState, mode: int):
    """Project ``mode`` on vacuum.

    Returns ``(probability, posterior without the mode)``; the probability is
    ``exp(-mu^T (V_m + I/2)^{-1} mu / 2) / sqrt(det(V_m + I/2))``, i.e. the
    heterodyne density at the origin times 2 pi.
    """
    _check_mode(state.num_modes, mode)
    A = state.mode_cov(mode) + 0.5 * np.eye(2)
    mu = state.mode_mean(mode)
    quad = np.einsum("...i,ij,...j->...", mu, np.linalg.inv(A), mu)
    prob = np.exp(-0.5 * quad) / np.sqrt(np.linalg.det(A))
    if state.num_modes == 1:
        return prob, None
    return prob, _project_out(state, mode, np.zeros(state.batch_shape + (2,)))


def photocount_coherent(amplitudes, rng: np.random.Generator) -> np.ndarray:
    """Photon counts of a product coherent state: independent Poisson(|beta_i|^2)."""
    beta = np.asarray(amplitudes, dtype=complex)
    if not np.all(np.isfinite(beta)):
        raise ValueError("amplitudes must be finite")
    return rng.poisson(np.abs(beta) ** 2)


@dataclass
class MeasurementRecord:
    """Ordered outcome stream of a single trial.

    Entries are dicts ``{"kind": "homodyne"|"heterodyne"|"photocount", "mode": m,
    "value": ...}``; heterodyne values are ``[x, p]``.
    """

    trial_id: int
    seed: int
    entries: list = field(default_factory=list)

    def add_homodyne(self, outcome: HomodyneOutcome):
        self.entries.append(
            {"kind": "homodyne", "mode": int(outcome.mode), "quadrature": outcome.quadrature,
             "value": float(outcome.value), "resolution_sq": float(outcome.resolution_sq)}
        )

    def add_heterodyne(self, outcome: HeterodyneOutcome):
        self.entries.append(
            {"kind": "heterodyne", "mode": int(outcome.mode),
             "value": [float(outcome.x), float(outcome.p)], "squeeze": float(outcome.squeeze)}
        )

    def add_photocount(self, mode: int, count: int):
        self.entries.append({"kind": "photocount", "mode": int(mode), "value": int(count)})

    def to_json(self) -> str:
        return json.dumps({"trial": self.trial_id, "seed": self.seed, "entries": self.entries})

    @classmethod
    def from_json(cls, line: str) -> "MeasurementRecord":
        d = json.loads(line)
        return cls(int(d["trial"]), int(d["seed"]), list(d["entries"]))


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path) -> list:
    with open(path) as fh:
        return [MeasurementRecord.from_json(line) for line in fh if line.strip()]
