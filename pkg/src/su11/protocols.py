"""Circuits for displacement detection, with estimators and statistical verdicts.

Monte-Carlo protocols propagate a whole block of trials as one batched
Gaussian state; the random draws for circuit step ``k`` of a block come from the
stream ``(seed, block, k)`` so results do not depend on how blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import gaussian as g
from .measurement import epr_measure, homodyne_bae, squeezed_heterodyne
from .rng import as_streams, run_blocks

__all__ = [
    "BaeSequenceConfig",
    "EstimatorReport",
    "impulse",
    "initial_state",
    "run_bae_homodyne",
    "run_squeeze_enhanced",
    "run_squeezed_heterodyne",
    "run_su11_detector",
    "run_independent_modes",
    "run_epr_measurement_only",
    "su11_output_epr",
    "squeeze_displace_unsqueeze",
    "run_mach_zehnder",
    "mach_zehnder_state",
    "shot_noise_factor",
    "run_su11_phase_probe",
    "phase_probe_fit",
    "circuit_identities",
    "posterior_variance",
    "ks_equivalent",
    "run_measurement_identity",
    "outcome_covariance",
    "squeeze_conjugation_error",
]

KS_ALPHA = 0.01


def impulse(rounds: int, at: int, gamma1: float, gamma2: float = 0.0) -> np.ndarray:
    """Displacement schedule with a single kick ``(gamma1 + i gamma2)/sqrt2`` before round ``at`` (1-based)."""
    sched = np.zeros(rounds, dtype=complex)
    sched[at - 1] = (gamma1 + 1j * gamma2) / np.sqrt(2)
    return sched


@dataclass
class BaeSequenceConfig:
    sigma_sq: float
    initial_variance: float = 0.5
    displacements: Sequence[complex] | None = None
    rounds: int = 10
    trials: int = 100_000
    target_round: int | None = None

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        if not self.initial_variance > 0:
            raise ValueError("initial_variance must be positive")
        if self.rounds < 2:
            raise ValueError("need at least two rounds to form a difference estimator")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.displacements is None:
            self.displacements = np.zeros(self.rounds, dtype=complex)
        self.displacements = np.asarray(self.displacements, dtype=complex)
        if self.displacements.shape != (self.rounds,):
            raise ValueError("one displacement per round is required")
        if self.target_round is None:
            kicked = np.flatnonzero(self.displacements[1:]) + 2
            self.target_round = int(kicked[0]) if kicked.size else self.rounds
        if not 2 <= self.target_round <= self.rounds:
            raise ValueError("target_round must lie in [2, rounds]")


@dataclass
class EstimatorReport:
    """Summary of an estimator over many trials.

    ``estimates`` are trial-averaged estimator values (per round for sequences,
    per quadrature for two-mode detectors). The variance verdict uses the
    Gaussian sampling error of a variance, ``analytic * sqrt(2/(N-1))``.
    """

    estimates: np.ndarray
    truth: np.ndarray
    empirical_variance: np.ndarray
    analytic_variance: np.ndarray
    trials: int
    samples: np.ndarray = field(repr=False)
    extras: dict = field(default_factory=dict)

    @property
    def variance_se(self):
        return np.asarray(self.analytic_variance) * np.sqrt(2.0 / (self.trials - 1))

    @property
    def z_score(self):
        return (np.asarray(self.empirical_variance) - self.analytic_variance) / self.variance_se

    @property
    def mean_z(self):
        """Bias in units of the standard error of the mean."""
        se = np.sqrt(np.asarray(self.analytic_variance) / self.trials)
        return (np.asarray(self.estimates) - self.truth) / se

    def to_dict(self, exclude=()) -> dict:
        """JSON-ready summary; extras named in ``exclude`` are left out."""

        def tolist(v):
            return np.asarray(v).tolist()

        out = {
            "estimates": tolist(self.estimates),
            "truth": tolist(self.truth),
            "empirical_variance": tolist(self.empirical_variance),
            "analytic_variance": tolist(self.analytic_variance),
            "z_score": tolist(self.z_score),
            "trials": self.trials,
        }
        out.update({k: tolist(v) if isinstance(v, np.ndarray) else v
                    for k, v in self.extras.items() if k not in exclude})
        return out


def posterior_variance(sigma_sq: float, initial_variance: float, n) -> np.ndarray:
    """Closed-form x-variance after ``n`` BAE measurements."""
    return sigma_sq / (np.asarray(n) + sigma_sq / initial_variance)


def initial_state(initial_variance: float) -> g.GaussianState:
    """Pure single-mode state with x-variance ``initial_variance``."""
    return g.GaussianState(np.zeros(2), np.diag([initial_variance, 0.25 / initial_variance]))


def _run_sequence(config: BaeSequenceConfig, measure, rng, workers=None):
    """Drive ``displace -> measure`` rounds; returns outcomes (trials x rounds) and x-variances."""
    streams = as_streams(rng)

    def block(n, step_rng):
        state = initial_state(config.initial_variance).broadcast(n)
        outcomes = np.empty((n, config.rounds))
        variances = np.empty(config.rounds)
        for k, gamma in enumerate(config.displacements):
            state = g.displace(state, 0, gamma)
            outcomes[:, k], state = measure(state, step_rng(k))
            variances[k] = state.cov[0, 0]
        return outcomes, variances

    parts = run_blocks(block, config.trials, streams, workers)
    return np.concatenate([p[0] for p in parts]), parts[0][1]


def _sequence_report(config, outcomes, variances, analytic) -> EstimatorReport:
    est = np.diff(outcomes, axis=1)  # column j estimates round j + 2
    gamma1 = np.sqrt(2) * config.displacements.real
    k = config.target_round - 2
    return EstimatorReport(
        estimates=est.mean(axis=0),
        truth=gamma1[1:],
        empirical_variance=np.var(est[:, k] - gamma1[k + 1], ddof=1),
        analytic_variance=analytic,
        trials=config.trials,
        samples=est,
        extras={
            "target_round": config.target_round,
            "posterior_variances": variances,
            "outcomes": outcomes,
        },
    )


def run_bae_homodyne(config: BaeSequenceConfig, rng, workers=None) -> EstimatorReport:
    """Repeated BAE position measurements on one persistent mode.

    The estimator ``x_n - x_{n-1}`` has variance ``2 sigma^2`` for every n.
    """

    def measure(state, gen):
        out, post = homodyne_bae(state, 0, config.sigma_sq, gen)
        return out.value, post

    outcomes, variances = _run_sequence(config, measure, rng, workers)
    rep = _sequence_report(config, outcomes, variances, 2 * config.sigma_sq)
    rep.extras["sigma_sq"] = config.sigma_sq
    return rep


def outcome_covariance(outcomes, sigma_sq: float, initial_variance: float):
    """Empirical covariance of a BAE outcome record against ``sigma^2 delta_jk + Sigma_0^2``.

    Returns ``(empirical, model, z)`` where ``z`` uses the Gaussian standard
    error ``sqrt((C_jj C_kk + C_jk^2) / (N - 1))`` of each entry.
    """
    outcomes = np.asarray(outcomes)
    n, k = outcomes.shape
    emp = np.cov(outcomes, rowvar=False)
    model = sigma_sq * np.eye(k) + initial_variance
    d = np.diag(model)
    se = np.sqrt((np.outer(d, d) + model**2) / (n - 1))
    return emp, model, (emp - model) / se


def squeeze_conjugation_error(r: float, sigma_sq: float, outcome: float, initial_variance: float = 0.5) -> float:
    """Posterior mismatch between a squeeze-conjugated homodyne and its direct equivalent.

    Conjugated: ``S_1(-r)``, homodyne with ``sigma_sq`` reading ``outcome``,
    ``S_1(r)``. Direct: homodyne with ``sigma_sq e^{-2r}`` reading
    ``outcome e^{-r}``. Returns the largest mean/covariance difference.
    """
    state = initial_state(initial_variance)
    _, post = homodyne_bae(g.squeeze1(state, 0, -r), 0, sigma_sq, outcome=outcome)
    conj = g.squeeze1(post, 0, r)
    _, direct = homodyne_bae(state, 0, sigma_sq * np.exp(-2 * r), outcome=outcome * np.exp(-r))
    return float(max(np.abs(conj.mean - direct.mean).max(), np.abs(conj.cov - direct.cov).max()))


def squeeze_displace_unsqueeze(r: float, gamma: complex) -> g.SymplecticOp:
    """Single-mode map ``S_1(r)`` -> ``D(gamma)`` -> ``S_1(-r)`` (time order).

    Its shift is ``(gamma_1 e^{r}, gamma_2 e^{-r})``.
    """
    return g.squeeze1_op(1, 0, -r) @ g.displacement_op(1, 0, gamma) @ g.squeeze1_op(1, 0, r)


def run_squeeze_enhanced(config: BaeSequenceConfig, r: float, rng, workers=None) -> EstimatorReport:
    """BAE sequence whose measurements are resolution-``sigma_sq`` homodynes conjugated by squeezing.

    Each round: displace, unsqueeze ``S_1(-r)``, measure x, squeeze ``S_1(r)``.
    Outcomes are rescaled by ``e^{-r}``, making the protocol equivalent to a bare
    BAE sequence with resolution ``sigma_sq e^{-2r}``.
    """
    scale = np.exp(-r)

    def measure(state, gen):
        state = g.squeeze1(state, 0, -r)
        out, post = homodyne_bae(state, 0, config.sigma_sq, gen)
        return out.value * scale, g.squeeze1(post, 0, r)

    outcomes, variances = _run_sequence(config, measure, rng, workers)
    effective = config.sigma_sq * np.exp(-2 * r)
    rep = _sequence_report(config, outcomes, variances, 2 * effective)
    rep.extras.update(
        sigma_sq_effective=effective,
        gain=squeeze_displace_unsqueeze(r, 1 / np.sqrt(2)).shift,
    )
    return rep


def run_squeezed_heterodyne(config: BaeSequenceConfig, r: float, rng, workers=None) -> EstimatorReport:
    """BAE sequence of heterodyne measurements in the squeezed basis.

    Raw outcomes obey ``x_{n+1} = x_n + gamma_1 e^{r} + W``; the estimator
    ``(x_{n+1} - x_n) e^{-r}`` has variance ``e^{-2r}``. ``config.sigma_sq`` is
    unused. The reported outcomes are the raw ``x``.
    """

    def measure(state, gen):
        out, post = squeezed_heterodyne(state, 0, r, gen)
        return out.x, post

    cfg = BaeSequenceConfig(1.0, 0.5, config.displacements, config.rounds, config.trials, config.target_round)
    outcomes, variances = _run_sequence(cfg, measure, rng, workers)
    rep = _sequence_report(cfg, outcomes * np.exp(-r), variances, np.exp(-2 * r))
    rep.extras["outcomes"] = outcomes
    return rep


def su11_output_epr(gamma_a: complex, gamma_b: complex, r: float):
    """Output EPR means and covariance of ``S_2(r) -> D(gamma_a) (x) D(gamma_b) -> S_2(-r)`` on vacuum."""
    state = g.squeeze2(g.vacuum(2), 0, 1, r)
    state = g.displace(g.displace(state, 0, gamma_a), 1, gamma_b)
    return g.epr_variables(g.squeeze2(state, 0, 1, -r))


def _two_quadrature_report(samples, truth, analytic, trials, extras) -> EstimatorReport:
    return EstimatorReport(
        estimates=samples.mean(axis=0),
        truth=np.asarray(truth, dtype=float),
        empirical_variance=samples.var(axis=0, ddof=1),
        analytic_variance=np.asarray(analytic, dtype=float),
        trials=trials,
        samples=samples,
        extras=extras,
    )


def _batched_trials(trials, rng, workers, simulate):
    parts = run_blocks(simulate, trials, as_streams(rng), workers)
    return np.concatenate(parts)


def run_su11_detector(gamma_a, gamma_b, r, sigma_sq, trials, rng, workers=None) -> EstimatorReport:
    """SU(1,1) displacement detector: squeeze, displace both modes, unsqueeze, EPR readout.

    The readout of ``a^dag + b`` is divided by ``e^{r}`` to estimate the
    amplified combination ``gamma_a^* + gamma_b`` (real and imaginary parts).
    For a signal on mode b only, ``gamma_b = sqrt2 gamma``, the estimate of
    ``gamma`` is this value divided by ``sqrt2``; it is stored in ``extras``.
    """
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")

    def simulate(n, step_rng):
        state = g.squeeze2(g.vacuum(2), 0, 1, r).broadcast(n)
        state = g.displace(g.displace(state, 0, gamma_a), 1, gamma_b)
        state = g.squeeze2(state, 0, 1, -r)
        (sx, dp), _ = epr_measure(state, 0, 1, sigma_sq, step_rng(0))
        return np.stack([sx.value, dp.value], axis=-1)

    raw = _batched_trials(trials, rng, workers, simulate)
    amplified = raw * np.exp(-r)
    c = np.conj(gamma_a) + gamma_b
    means, _ = su11_output_epr(gamma_a, gamma_b, r)
    return _two_quadrature_report(
        amplified,
        [c.real, c.imag],
        [(0.5 + sigma_sq) * np.exp(-2 * r)] * 2,
        trials,
        {"raw_outcomes": raw, "gamma_estimate": amplified.mean(axis=0) / np.sqrt(2),
         "output_epr_means": [means.sum_x, means.diff_p, means.diff_x, means.sum_p]},
    )


def run_independent_modes(gamma, r, sigma_sq, trials, rng, workers=None) -> EstimatorReport:
    """Two uncoupled modes with opposite squeezing: x readout on a, p readout on b.

    Same displacement ``gamma`` on both modes. Outcomes are reported rescaled by
    ``e^{-r}`` and estimate ``(gamma_1, gamma_2)``.
    """

    def simulate(n, step_rng):
        state = g.vacuum(2).broadcast(n)
        state = g.squeeze1(g.squeeze1(state, 0, r), 1, -r)
        state = g.displace(g.displace(state, 0, gamma), 1, gamma)
        state = g.squeeze1(g.squeeze1(state, 0, -r), 1, r)
        gen = step_rng(0)
        xa, state = homodyne_bae(state, 0, sigma_sq, gen)
        pb, _ = homodyne_bae(state, 1, sigma_sq, gen, quadrature="p")
        return np.stack([xa.value, pb.value], axis=-1)

    raw = _batched_trials(trials, rng, workers, simulate)
    g1, g2 = np.sqrt(2) * gamma.real, np.sqrt(2) * gamma.imag
    return _two_quadrature_report(
        raw * np.exp(-r), [g1, g2], [(0.5 + sigma_sq) * np.exp(-2 * r)] * 2, trials, {"raw_outcomes": raw}
    )


def run_epr_measurement_only(gamma, r, trials, rng, workers=None) -> EstimatorReport:
    """Measurement-only version: no second squeezer, sub-QNL EPR readout.

    Two-mode squeezed vacuum, ``D(sqrt2 gamma)`` on mode b, then a joint EPR
    measurement with noise ``e^{-2r}/2``. Outcomes directly estimate
    ``gamma_a^* + gamma_b = sqrt2 gamma``; ``raw_outcomes * e^{r}`` is
    distributed like the SU(1,1) detector's readout.
    """
    sigma_sq = 0.5 * np.exp(-2 * r)

    def simulate(n, step_rng):
        state = g.squeeze2(g.vacuum(2), 0, 1, r).broadcast(n)
        state = g.displace(state, 1, np.sqrt(2) * gamma)
        (sx, dp), _ = epr_measure(state, 0, 1, sigma_sq, step_rng(0))
        return np.stack([sx.value, dp.value], axis=-1)

    raw = _batched_trials(trials, rng, workers, simulate)
    c = np.sqrt(2) * gamma
    return _two_quadrature_report(
        raw, [c.real, c.imag], [np.exp(-2 * r)] * 2, trials,
        {"raw_outcomes": raw * np.exp(r), "gamma_estimate": raw.mean(axis=0) / np.sqrt(2),
         "sigma_sq": sigma_sq},
    )


def mach_zehnder_state(alpha: complex, phi: float, dark_port_r: float) -> g.GaussianState:
    """Output of the Mach-Zehnder interferometer with a squeezed dark port.

    Laser coherent state on a; vacuum squeezed in p (``S_1(-r)``) on b, which is
    the quadrature out of phase with the laser after the first beamsplitter.
    Arms receive ``exp(i J_3 (pi/2 + phi))``; recombination by ``B^dag``.
    """
    state = g.squeeze1(g.coherent([alpha, 0]), 1, -dark_port_r)
    B = g.beamsplitter_op(2, 0, 1)
    theta = 0.5 * (np.pi / 2 + phi)
    phase = g.rotation_op(2, 0, theta) @ g.rotation_op(2, 1, -theta)
    return (B.inverse() @ phase @ B)(state)


def run_mach_zehnder(alpha: complex, phi: float, dark_port_r: float):
    """``(<2 J_3>, Var(2 J_3))`` at the output for phase signal ``phi``."""
    if abs(alpha) ** 2 > 1e4:
        raise ValueError("|alpha|^2 must not exceed 1e4")
    m = g.quadratic_moments(mach_zehnder_state(alpha, phi, dark_port_r))
    return m.j3x2_mean, m.j3x2_var


def shot_noise_factor(alpha: complex, dark_port_r: float) -> float:
    """Reduction of the laser-power-proportional part of Var(2 J_3) at phi = 0.

    The output variance is ``|alpha|^2 e^{-2r} + sinh^2 r``; the second term is
    the dark-port photons' own noise and does not scale with power. The ratio
    of the power-dependent parts with and without squeezing is ``e^{-2r}``.
    """
    var = lambda a, r: run_mach_zehnder(a, 0.0, r)[1]
    return (var(alpha, dark_port_r) - var(0, dark_port_r)) / (var(alpha, 0.0) - var(0, 0.0))


def run_su11_phase_probe(phi: float, r: float) -> float:
    """<K_0> after ``S_2(r)``, common phase ``exp(i K_0 phi)``, ``S_2(-r)`` on vacuum."""
    if abs(phi) > 0.3:
        raise ValueError("|phi| must not exceed 0.3")
    state = g.squeeze2(g.vacuum(2), 0, 1, r)
    state = g.rotate(g.rotate(state, 0, phi / 2), 1, phi / 2)
    return g.quadratic_moments(g.squeeze2(state, 0, 1, -r)).k0_mean


def phase_probe_fit(r: float, phis=(-1e-2, -1e-3, 0.0, 1e-3, 1e-2)):
    """Least-squares quadratic fit of <K_0>(phi); returns (constant, linear, quadratic, max residual)."""
    phis = np.asarray(phis, dtype=float)
    vals = np.array([run_su11_phase_probe(p, r) for p in phis])
    design = np.vander(phis, 3, increasing=True)
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    resid = np.abs(design @ coef - vals).max()
    return coef[0], coef[1], coef[2], resid


def circuit_identities(r: float = 0.4, gamma: complex = 0.3 - 0.2j) -> dict:
    """Max-entry errors of the three beamsplitter conjugation identities.

    * squeeze: ``S_1(r) (x) S_1(-r) = B^dag S_2(r) B``
    * displacement: ``D(gamma) (x) D(gamma) = B^dag [I (x) D(sqrt2 gamma)] B``
    * measurement: rows of ``x_a, p_b`` read after ``B^dag`` equal the EPR rows
    """
    B = g.beamsplitter_op(2, 0, 1)
    Binv = B.inverse()
    local = g.squeeze1_op(2, 0, r) @ g.squeeze1_op(2, 1, -r)
    conj = Binv @ g.squeeze2_op(2, 0, 1, r) @ B
    common = g.displacement_op(2, 0, gamma) @ g.displacement_op(2, 1, gamma)
    single = Binv @ g.displacement_op(2, 1, np.sqrt(2) * gamma) @ B
    xp_rows = np.zeros((2, 4))
    xp_rows[0, 0] = xp_rows[1, 3] = 1.0
    epr = g.EPR_MATRIX[:2]
    return {
        "squeeze": float(np.abs(local.matrix - conj.matrix).max()),
        "displacement": float(max(np.abs(common.matrix - single.matrix).max(),
                                  np.abs(common.shift - single.shift).max())),
        "measurement": float(np.abs(xp_rows @ Binv.matrix - epr).max()),
    }


def run_measurement_identity(gamma, r, sigma_sq, trials, rng, workers=None):
    """Sample both sides of the measurement identity on a displaced two-mode squeezed vacuum.

    Returns ``(joint, local)``: outcomes of a direct EPR measurement, and of
    ``x_a``, ``p_b`` homodynes after ``B^dag``, each with noise ``sigma_sq``.
    Both arrays have shape ``(trials, 2)`` and are drawn from separate streams.
    """
    prepared = g.displace(g.squeeze2(g.vacuum(2), 0, 1, r), 1, gamma)
    Binv = g.beamsplitter_op(2, 0, 1).inverse()

    def joint(n, step_rng):
        (sx, dp), _ = epr_measure(prepared.broadcast(n), 0, 1, sigma_sq, step_rng(0))
        return np.stack([sx.value, dp.value], axis=-1)

    def local(n, step_rng):
        gen = step_rng(1)
        xa, state = homodyne_bae(Binv(prepared).broadcast(n), 0, sigma_sq, gen)
        pb, _ = homodyne_bae(state, 1, sigma_sq, gen, quadrature="p")
        return np.stack([xa.value, pb.value], axis=-1)

    return _batched_trials(trials, rng, workers, joint), _batched_trials(trials, rng, workers, local)


def ks_equivalent(a, b, alpha: float = KS_ALPHA):
    """Two-sample KS test; returns ``(passes, p_value)``."""
    p = stats.ks_2samp(np.ravel(a), np.ravel(b)).pvalue
    return bool(p > alpha), float(p)
