"""Configuration-driven experiment runner.

Each subcommand runs one protocol or check, prints one verdict line per check
and writes ``summary.json`` and ``trials.csv`` to the output directory.

``trials.csv`` columns: ``trial, step, kind, value, estimator``. ``step`` is the
1-based circuit step (round, quadrature or mode); ``estimator`` is empty where
no estimate is formed. Identical config and seed give identical bytes whatever
the number of workers.

Exit codes: 0 all checks pass, 2 configuration error, 3 numerically invalid
state, 4 a statistical or numerical check failed.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
import json
import os
from pathlib import Path
import sys

import numpy as np

from . import checks as ck
from . import plon
from . import protocols as P
from .gaussian import InvalidStateError

SCHEMA_VERSION = 1
OUT_ENV = "SU11_OUT"
DEFAULT_OUT = "su11-out"
EXIT_OK, EXIT_CONFIG, EXIT_INVALID, EXIT_FAILED = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parameters


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _at_least(n):
    return lambda v: None if v >= n else f"must be at least {n}"


def _one_of(*opts):
    return lambda v: None if v in opts else f"must be one of {', '.join(map(str, opts))}"


@dataclass(frozen=True)
class Param:
    kind: str  # float | int | bool | complex | str | floats
    default: object
    check: object = None


def _coerce(name, kind, value):
    try:
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == "complex":
            if isinstance(value, (list, tuple)) and len(value) == 2:
                return complex(float(value[0]), float(value[1]))
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return complex(value)
            raise TypeError
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == "floats":
            out = [float(v) for v in value]
            if not out:
                raise TypeError
            return out
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"parameters.{name}: expected {kind}, got {value!r}")


def validate_parameters(table: dict, given: dict) -> dict:
    unknown = sorted(set(given) - set(table))
    if unknown:
        raise ConfigError(f"parameters.{unknown[0]}: unknown parameter")
    out = {}
    for name, p in table.items():
        value = _coerce(name, p.kind, given[name]) if name in given else p.default
        if p.check is not None:
            msg = p.check(value)
            if msg:
                raise ConfigError(f"parameters.{name}: {msg}")
        out[name] = value
    return out


# ------------------------------------------------------------------- results


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


@dataclass
class Result:
    checks: list
    summary: dict
    rows: list = field(default_factory=list)  # (trial, step, kind, value, estimator) column blocks
    files: dict = field(default_factory=dict)


def _block(trial, step, kind, value, estimator=None):
    value = np.asarray(value, dtype=float).ravel()
    n = value.size
    est = np.full(n, np.nan) if estimator is None else np.asarray(estimator, dtype=float).ravel()
    return (np.broadcast_to(trial, n).ravel(), np.broadcast_to(step, n).ravel(), kind, value, est)


def _grid(values, estimator=None, kind="outcome"):
    """Rows for a (trials, steps) array."""
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    trial = np.repeat(np.arange(n), k)
    step = np.tile(np.arange(1, k + 1), n)
    return _block(trial, step, kind, values, estimator)


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def write_csv(path: Path, blocks, max_trials: int | None = None) -> int:
    """Write row blocks ordered by trial, step, block order; returns the row count."""
    if max_trials is not None:
        blocks = [tuple(c[b[0] < max_trials] if j != 2 else c for j, c in enumerate(b)) for b in blocks]
    if blocks:
        trial = np.concatenate([b[0] for b in blocks])
        step = np.concatenate([b[1] for b in blocks])
        kind = np.concatenate([np.full(b[3].size, k) for k, b in enumerate(blocks)])
        value = np.concatenate([b[3] for b in blocks])
        est = np.concatenate([b[4] for b in blocks])
        order = np.lexsort((kind, step, trial))
    else:
        order = []
    names = [b[2] for b in blocks]
    with open(path, "w", newline="") as fh:
        fh.write("trial,step,kind,value,estimator\n")
        fh.writelines(
            f"{trial[i]},{step[i]},{names[kind[i]]},{_fmt(value[i])},{_fmt(est[i])}\n" for i in order
        )
    return len(order)


def _next_seed(seed: int) -> int:
    return (seed + 1) % 2**64


def _z_check(name, z, limit):
    z = np.atleast_1d(z)
    worst = float(np.abs(z).max())
    return Check(name, worst < limit, f"max |z| = {worst:.2f} (< {limit})")


def _tol_check(name, err, tol):
    return Check(name, bool(err <= tol), f"error {err:.2e} (<= {tol:g})")


def _ks_check(name, a, b):
    ok, p = P.ks_equivalent(a, b)
    return Check(name, ok, f"KS p = {p:.3f} (> {P.KS_ALPHA})")


# --------------------------------------------------------------- subcommands

SEQUENCE_PARAMS = {
    "initial_variance": Param("float", 0.5, _positive),
    "rounds": Param("int", 10, _at_least(2)),
    "kick_round": Param("int", 5, _at_least(2)),
    "gamma1": Param("float", 0.3),
    "trials": Param("int", 100_000, _at_least(2)),
}


def _sequence_config(p, sigma_sq):
    if p["kick_round"] > p["rounds"]:
        raise ConfigError("parameters.kick_round: must not exceed rounds")
    return P.BaeSequenceConfig(
        sigma_sq, p["initial_variance"], P.impulse(p["rounds"], p["kick_round"], p["gamma1"]),
        p["rounds"], p["trials"],
    )


def _sequence_checks(rep, label):
    k = rep.extras["target_round"] - 2
    return [
        _z_check(f"{label} estimator variance vs {float(rep.analytic_variance):.4g}", rep.z_score, 3),
        _z_check(f"{label} estimator mean vs planted gamma1 (round {k + 2})", rep.mean_z[k], 4),
    ]


def run_bae(p, seed, workers):
    cfg = _sequence_config(p, p["sigma_sq"])
    rep = P.run_bae_homodyne(cfg, seed, workers)
    n = np.arange(1, cfg.rounds + 1)
    rec_err = float(np.abs(rep.extras["posterior_variances"] - P.posterior_variance(cfg.sigma_sq, cfg.initial_variance, n)).max())
    outcomes = rep.extras["outcomes"]
    centered = outcomes - np.cumsum(np.sqrt(2) * cfg.displacements.real)
    _, _, z = P.outcome_covariance(centered, cfg.sigma_sq, cfg.initial_variance)
    checks = [_tol_check("posterior variance recursion", rec_err, 1e-10)]
    checks += _sequence_checks(rep, "BAE")
    checks.append(_z_check("outcome covariance sigma^2 delta + Sigma0^2", z, 5))
    est = np.column_stack([np.full(len(outcomes), np.nan), rep.samples])
    return Result(checks, rep.to_dict(exclude=("outcomes",)), [_grid(outcomes, est, "homodyne_x")])


def run_squeeze_enhanced(p, seed, workers):
    cfg = _sequence_config(p, p["sigma_sq"])
    r = p["r"]
    if p["detector"] == "homodyne":
        rep = P.run_squeeze_enhanced(cfg, r, seed, workers)
        direct = P.run_bae_homodyne(_sequence_config(p, p["sigma_sq"] * np.exp(-2 * r)), _next_seed(seed), workers)
        checks = _sequence_checks(rep, "conjugated homodyne")
        err = P.squeeze_conjugation_error(r, p["sigma_sq"], 0.37, p["initial_variance"])
        checks.append(_tol_check("posterior matches direct homodyne at sigma^2 e^{-2r}", err, 1e-10))
        kind, scale = "homodyne_x_rescaled", 1.0
    else:
        rep = P.run_squeezed_heterodyne(cfg, r, seed, workers)
        direct = P.run_bae_homodyne(_sequence_config(p, 0.5 * np.exp(-2 * r)), _next_seed(seed), workers)
        checks = _sequence_checks(rep, "squeezed heterodyne")
        kind, scale = "heterodyne_x", np.exp(-r)
    k = rep.extras["target_round"] - 2
    checks.append(_ks_check("estimator distribution vs direct BAE", rep.samples[:, k], direct.samples[:, k]))
    outcomes = rep.extras["outcomes"]
    est = np.column_stack([np.full(len(outcomes), np.nan), rep.samples])
    summary = rep.to_dict(exclude=("outcomes",)) | {"detector": p["detector"], "outcome_scale": scale}
    return Result(checks, summary, [_grid(outcomes, est, kind)])


def _two_quadrature_rows(raw, est):
    return [_grid(raw[:, :1], est[:, :1], "sum_x"), _grid(raw[:, 1:], est[:, 1:], "diff_p")]


def run_su11(p, seed, workers):
    ga, gb, r = p["gamma_a"], p["gamma_b"], p["r"]
    means, _ = P.su11_output_epr(ga, gb, r)
    amp = (np.conj(ga) + gb) * np.exp(r)
    deamp = (ga - np.conj(gb)) * np.exp(-r)
    arrow_err = max(abs(means.amplified - amp), abs(means.deamplified - deamp))
    sig = p["gamma_b"]
    pattern, _ = P.su11_output_epr(np.conj(sig), sig, r)
    pattern_err = max(abs(pattern.amplified * np.exp(-r) - 2 * sig), abs(pattern.deamplified))
    rep = P.run_su11_detector(ga, gb, r, p["sigma_sq"], p["trials"], seed, workers)
    checks = [
        _tol_check("output EPR means (g_a* + g_b)e^r, (g_a - g_b*)e^-r", arrow_err, 1e-10),
        _tol_check("signal pattern: amplified 2g, de-amplified 0", pattern_err, 1e-10),
        _z_check(f"readout variance vs (1/2 + sigma^2) e^-2r = {rep.analytic_variance[0]:.4g}", rep.z_score, 3),
        _z_check("readout mean vs g_a* + g_b", rep.mean_z, 4),
    ]
    summary = rep.to_dict(exclude=("raw_outcomes",)) | {"estimator_scale": "readout / e^r"}
    return Result(checks, summary, _two_quadrature_rows(rep.extras["raw_outcomes"], rep.samples))


def run_epr_only(p, seed, workers):
    gamma, r = p["gamma"], p["r"]
    rep = P.run_epr_measurement_only(gamma, r, p["trials"], seed, workers)
    full = P.run_su11_detector(0, np.sqrt(2) * gamma, r, 0.5, p["trials"], _next_seed(seed), workers)
    raw_scaled = rep.extras["raw_outcomes"]
    checks = [
        _z_check(f"estimator variance vs e^-2r = {rep.analytic_variance[0]:.4g}", rep.z_score, 3),
        _z_check("estimator mean vs sqrt2 gamma", rep.mean_z, 4),
        _ks_check("sum_x vs full detector at QNL", raw_scaled[:, 0], full.extras["raw_outcomes"][:, 0]),
        _ks_check("diff_p vs full detector at QNL", raw_scaled[:, 1], full.extras["raw_outcomes"][:, 1]),
    ]
    summary = rep.to_dict(exclude=("raw_outcomes",)) | {"measurement_noise": 0.5 * np.exp(-2 * r)}
    return Result(checks, summary, _two_quadrature_rows(rep.samples, rep.samples / np.sqrt(2)))


def run_mach_zehnder(p, seed, workers):
    alpha, r = p["alpha"], p["r"]
    phis = np.asarray(p["phis"])
    moments = np.array([P.run_mach_zehnder(alpha, phi, r) for phi in phis])
    factor = P.shot_noise_factor(alpha, r)
    var0 = P.run_mach_zehnder(alpha, 0.0, r)[1]
    closed = abs(alpha) ** 2 * np.exp(-2 * r) + np.sinh(r) ** 2
    checks = [
        _tol_check(f"shot-noise reduction factor vs e^-2r = {np.exp(-2 * r):.6f}", abs(factor - np.exp(-2 * r)), 1e-6),
        _tol_check("Var(2 J3) at phi = 0 vs |alpha|^2 e^-2r + sinh^2 r", abs(var0 - closed) / closed, 1e-10),
    ]
    summary = {"alpha": [alpha.real, alpha.imag], "r": r, "phis": phis.tolist(),
               "j3x2_mean": moments[:, 0].tolist(), "j3x2_var": moments[:, 1].tolist(),
               "shot_noise_factor": factor, "variance_reduction_total": var0 / P.run_mach_zehnder(alpha, 0.0, 0.0)[1]}
    if abs(alpha) ** 2 <= 4:
        fock = ck.mach_zehnder_fock(alpha, phis, r)
        err = float(np.abs(fock - moments).max())
        checks.append(_tol_check("Gaussian moments vs Fock oracle", err, 1e-6))
        summary["fock_discrepancy"] = err
    idx = np.arange(phis.size)
    rows = [_block(idx, 1, "phi", phis), _block(idx, 2, "j3x2_mean", moments[:, 0]),
            _block(idx, 3, "j3x2_var", moments[:, 1])]
    return Result(checks, summary, rows)


def run_phase_probe(p, seed, workers):
    phis = np.asarray(p["phis"])
    const, lin, quad, resid = P.phase_probe_fit(p["r"], phis)
    values = np.array([P.run_su11_phase_probe(phi, p["r"]) for phi in phis])
    checks = [
        Check("linear coefficient of <K0>(phi)", abs(lin) < 1e-8, f"|c1| = {abs(lin):.2e} (< 1e-08)"),
        _tol_check("quadratic fit residual", resid, 1e-10),
        _tol_check("<K0> at phi = 0 equals vacuum value 1/2", abs(P.run_su11_phase_probe(0.0, p["r"]) - 0.5), 1e-12),
    ]
    summary = {"r": p["r"], "phis": phis.tolist(), "k0_mean": values.tolist(),
               "fit": {"constant": const, "linear": lin, "quadratic": quad, "max_residual": resid}}
    idx = np.arange(phis.size)
    return Result(checks, summary, [_block(idx, 1, "phi", phis), _block(idx, 2, "k0_mean", values)])


def run_equivalences(p, seed, workers):
    errs = P.circuit_identities(p["r"], p["gamma"])
    checks = [_tol_check(f"{name} identity", e, 1e-12) for name, e in errs.items()]
    joint, local = P.run_measurement_identity(p["gamma"], p["r"], p["sigma_sq"], p["trials"], seed, workers)
    checks.append(_ks_check("sampled EPR readout vs beamsplitter + local homodynes (sum_x)", joint[:, 0], local[:, 0]))
    checks.append(_ks_check("sampled EPR readout vs beamsplitter + local homodynes (diff_p)", joint[:, 1], local[:, 1]))
    summary = {"matrix_errors": errs, "joint_mean": joint.mean(0).tolist(), "local_mean": local.mean(0).tolist(),
               "joint_var": joint.var(0, ddof=1).tolist(), "local_var": local.var(0, ddof=1).tolist()}
    rows = _two_quadrature_rows(joint, np.full(joint.shape, np.nan))
    rows += [_grid(local[:, :1], None, "local_x_a"), _grid(local[:, 1:], None, "local_p_b")]
    return Result(checks, summary, rows)


def _load_matrix(p):
    source, M = p["matrix"], p["modes"]
    if source == "random":
        return plon.random_transfer_matrix(M, np.random.default_rng(p["matrix_seed"]))
    if source == "identity":
        return np.eye(M, dtype=complex)
    try:
        data = json.loads(Path(source).read_text())
        L = np.array([[complex(*z) for z in row] for row in data], dtype=complex)
        return plon.check_transfer_matrix(L)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"parameters.matrix: cannot load transfer matrix from {source!r} ({exc})") from None


def _matrix_json(L):
    return [[[z.real, z.imag] for z in row] for row in np.asarray(L)]


def _r_from(p):
    return float(np.arcsinh(np.sqrt(p["sinh2r"])))


def run_plon_characterize(p, seed, workers):
    L = _load_matrix(p)
    r = _r_from(p)
    records = plon.sample_runs(L, r, "characterization", p["runs"], seed, workers)
    rec = plon.reconstruct(records, r, truth=L, strict=False, gap_factor=p["gap_factor"], min_samples=p["min_samples"])
    N = len(records)
    ch2 = np.cosh(r) ** 2
    alice_var = plon.alice_marginal_variance(records)
    alice_z = (alice_var - ch2) / (ch2 * np.sqrt(1.0 / (N - 1)))
    bob = records.bob
    bob_pred = np.sinh(r) ** 2 * np.linalg.norm(L, axis=0) ** 2
    bob_z = (bob.mean(0) - bob_pred) / (bob.std(0, ddof=1) / np.sqrt(N))
    fids = np.array(rec.fidelities)
    bad = [i for i, c in enumerate(rec.columns) if c.ill_conditioned]
    checks = [
        Check("all columns well conditioned", not bad, f"ill-conditioned columns: {bad}" if bad else "none flagged"),
        Check("per-column fidelity >= 0.99", bool(fids.min() >= 0.99), f"min fidelity {fids.min():.5f}"),
        _z_check(f"Alice marginal quadrature variance vs cosh^2 r = {ch2:.4f}", alice_z, 3),
        _z_check("Bob mean counts vs sinh^2 r |L_i|^2", bob_z, 3),
    ]
    report = rec.to_dict()
    report["settings"] |= {"seed": seed, "sinh2r": p["sinh2r"]}
    summary = {"report": report, "alice_variance": alice_var.tolist(), "bob_means": bob.mean(0).tolist(),
               "bob_predicted": bob_pred.tolist(), "L_truth": _matrix_json(L)}
    files = {"reconstruction.json": json.dumps(report, indent=2, sort_keys=True) + "\n"}
    if p["write_records"]:
        files["records.jsonl"] = (records, {"M": L.shape[0], "r": r, "seed": seed, "L_truth": _matrix_json(L)})
    M = L.shape[0]
    idx = np.arange(N)
    rows = []
    for m in range(M):
        rows += [_block(idx, m + 1, "alice_re", records.alice[:, m].real),
                 _block(idx, m + 1, "alice_im", records.alice[:, m].imag),
                 _block(idx, m + 1, "bob_count", bob[:, m])]
    return Result(checks, summary, rows, files)


def run_plon_sample(p, seed, workers):
    L = _load_matrix(p)
    if L.shape[0] > 4:
        raise ConfigError("parameters.modes: sampling runs are simulated only for M <= 4")
    r = _r_from(p)
    records = plon.sample_runs(L, r, "sampling", p["runs"], seed, workers)
    verdict = plon.validate_sampling_runs(records, L, r, min_runs=p["min_runs"])
    checks = []
    for pat in verdict["patterns"]:
        checks.append(Check(
            f"Bob counts given Alice pattern {pat['pattern']} ({pat['runs']} runs)", pat["passed"],
            f"chi-square p = {pat['p_value']:.3f} (> 0.01), forbidden outcomes seen {pat['forbidden_hits']}",
        ))
    summary = {"verdict": verdict, "simulated_fraction": float(records.simulated.mean()),
               "L_truth": _matrix_json(L), "r": r}
    N, M = len(records), L.shape[0]
    idx = np.arange(N)
    rows = []
    for m in range(M):
        rows += [_block(idx, m + 1, "alice_count", records.alice[:, m]),
                 _block(idx, m + 1, "bob_count", records.bob[:, m])]
    files = {}
    if p["write_records"]:
        files["records.jsonl"] = (records, {"M": M, "r": r, "seed": seed, "L_truth": _matrix_json(L)})
    return Result(checks, summary, rows, files)


def run_oracle_check(p, seed, workers):
    lie = ck.lie_algebra_errors(p["cutoff"])
    schmidt = ck.schmidt_error(p["r"], p["cutoff"])
    try:
        moments = ck.moment_discrepancies(p["moment_cutoff"])
    except ValueError as exc:
        raise ConfigError(f"parameters.moment_cutoff: {exc}") from None
    worst = max(m["discrepancy"] for m in moments)
    checks = [_tol_check(f"commutator {k}", v, 1e-10) for k, v in lie.items()]
    checks.append(_tol_check("two-mode squeezed vacuum Schmidt amplitudes", schmidt, 1e-8))
    checks.append(_tol_check("Gaussian vs Fock moments for every unitary", worst, 1e-6))
    summary = {"commutators": lie, "schmidt_error": schmidt, "moments": moments}
    idx = np.arange(len(moments))
    return Result(checks, summary, [_block(idx, 1, "moment_discrepancy", [m["discrepancy"] for m in moments])])


PLON_COMMON = {
    "modes": Param("int", 4, _at_least(1)),
    "sinh2r": Param("float", 0.5, _positive),
    "matrix": Param("str", "random"),
    "matrix_seed": Param("int", 1, _non_negative),
    "write_records": Param("bool", False),
}


@dataclass(frozen=True)
class Subcommand:
    summary: str
    reproduces: str
    params: dict
    runner: object
    csv_max_trials: int | None = None


SUBCOMMANDS = {
    "bae": Subcommand(
        "repeated back-action-evading homodyne sequence with difference estimator",
        "estimator resolution sqrt(2) sigma and posterior-variance narrowing",
        {"sigma_sq": Param("float", 0.125, _positive), **SEQUENCE_PARAMS},
        run_bae,
    ),
    "squeeze-enhanced": Subcommand(
        "BAE sequence read out through squeeze-conjugated homodyne or squeezed heterodyne",
        "single-mode squeezing improving displacement resolution by e^-r",
        {"sigma_sq": Param("float", 0.5, _positive), "r": Param("float", float(np.log(2))),
         "detector": Param("str", "homodyne", _one_of("homodyne", "heterodyne")), **SEQUENCE_PARAMS},
        run_squeeze_enhanced,
    ),
    "su11": Subcommand(
        "SU(1,1) displacement detector with joint EPR readout",
        "two-mode amplification arrows and sub-QNL readout variance",
        {"gamma_a": Param("complex", 0j), "gamma_b": Param("complex", 0.2 - 0.1j),
         "r": Param("float", 0.5), "sigma_sq": Param("float", 0.5, _positive),
         "trials": Param("int", 100_000, _at_least(2))},
        run_su11,
    ),
    "epr-only": Subcommand(
        "truncated detector: two-mode squeezed vacuum probed by a high-resolution EPR measurement",
        "equivalence of the measurement-only detector with the full SU(1,1) detector",
        {"gamma": Param("complex", 0.2 - 0.1j), "r": Param("float", 0.5),
         "trials": Param("int", 100_000, _at_least(2))},
        run_epr_only,
    ),
    "mach-zehnder": Subcommand(
        "Mach-Zehnder interferometer with squeezed dark port (moments)",
        "output J3 signal and shot-noise reduction e^-2r",
        {"alpha": Param("complex", 2 + 0j), "r": Param("float", 0.5),
         "phis": Param("floats", [-0.1, -0.05, 0.0, 0.05, 0.1])},
        run_mach_zehnder,
    ),
    "phase-probe": Subcommand(
        "SU(1,1) interferometer driven by a common phase, vacuum inputs",
        "absence of a first-order <K0> signal",
        {"r": Param("float", 0.5), "phis": Param("floats", [-1e-2, -1e-3, 0.0, 1e-3, 1e-2])},
        run_phase_probe,
    ),
    "equivalences": Subcommand(
        "beamsplitter conjugation identities for squeezers, displacements and measurements",
        "circuit equivalences between single-mode and two-mode pictures",
        {"r": Param("float", 0.4), "gamma": Param("complex", 0.3 - 0.2j),
         "sigma_sq": Param("float", 0.5, _positive), "trials": Param("int", 100_000, _at_least(2))},
        run_equivalences,
    ),
    "plon-characterize": Subcommand(
        "entangled-pair characterization of a lossy linear network",
        "reconstruction of the transfer matrix from vacuum-conditioned heterodyne records",
        {**PLON_COMMON, "runs": Param("int", 1_000_000, _at_least(1)),
         "gap_factor": Param("float", 4.0, _positive), "min_samples": Param("int", 1000, _at_least(1))},
        run_plon_characterize,
        csv_max_trials=10_000,
    ),
    "plon-sample": Subcommand(
        "randomized boson sampling with photon-counting at both ends",
        "boson-sampling instances heralded by entangled partners",
        {**PLON_COMMON, "modes": Param("int", 3, _at_least(1)), "runs": Param("int", 200_000, _at_least(1)),
         "min_runs": Param("int", 50, _at_least(1))},
        run_plon_sample,
        csv_max_trials=10_000,
    ),
    "oracle-check": Subcommand(
        "Fock-space oracle: Lie algebra, Schmidt form, Gaussian moment agreement",
        "algebraic identities underlying every circuit",
        {"cutoff": Param("int", 20, _at_least(4)), "moment_cutoff": Param("int", 30, _at_least(10)),
         "r": Param("float", 0.5)},
        run_oracle_check,
    ),
}


# ---------------------------------------------------------------- config I/O


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {cfg.get('schema')!r}")
    allowed = {"schema", "subcommand", "seed", "trials", "workers", "output_path", "parameters"}
    extra = sorted(set(cfg) - allowed)
    if extra:
        raise ConfigError(f"{extra[0]}: unknown config field")
    if not isinstance(cfg.get("parameters", {}), dict):
        raise ConfigError("parameters: must be an object")
    return cfg


def resolve(args) -> dict:
    """Merge config file and flags (flags win) into a validated experiment config."""
    cfg = load_config(args.config) if args.config else {"schema": SCHEMA_VERSION}
    name = args.subcommand or cfg.get("subcommand")
    if name is None:
        raise ConfigError("subcommand: missing (give it on the command line or in the config)")
    if cfg.get("subcommand") not in (None, name):
        raise ConfigError(f"subcommand: config says {cfg['subcommand']!r} but {name!r} was requested")
    if name not in SUBCOMMANDS:
        raise ConfigError(f"subcommand: unknown {name!r}")
    sub = SUBCOMMANDS[name]
    given = dict(cfg.get("parameters", {}))
    trials = args.trials if args.trials is not None else cfg.get("trials")
    if trials is not None:
        key = "runs" if "runs" in sub.params else "trials"
        if key not in sub.params:
            raise ConfigError(f"trials: subcommand {name!r} has no trials")
        given[key] = trials
    seed = args.seed if args.seed is not None else cfg.get("seed", 1)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    workers = args.workers if args.workers is not None else cfg.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError(f"workers: expected a positive integer, got {workers!r}")
    out = args.out or cfg.get("output_path") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return {
        "subcommand": name,
        "parameters": validate_parameters(sub.params, given),
        "seed": seed,
        "workers": workers,
        "output_path": str(out),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def run(config: dict) -> int:
    """Execute a resolved config, write artifacts and return the exit status."""
    name = config["subcommand"]
    sub = SUBCOMMANDS[name]
    result = sub.runner(config["parameters"], config["seed"], config["workers"])
    out = Path(config["output_path"])
    out.mkdir(parents=True, exist_ok=True)
    n_rows = write_csv(out / "trials.csv", result.rows, sub.csv_max_trials)
    for fname, content in result.files.items():
        if fname.endswith(".jsonl"):
            plon.write_records(out / fname, *content)
        else:
            (out / fname).write_text(content)
    summary = {
        "schema": SCHEMA_VERSION,
        "subcommand": name,
        "seed": config["seed"],
        "parameters": config["parameters"],
        "passed": all(c.passed for c in result.checks),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
        "results": result.summary,
        "csv_rows": n_rows,
        "csv_max_trials": sub.csv_max_trials,
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    for c in result.checks:
        print(c.line())
    return EXIT_OK if summary["passed"] else EXIT_FAILED


def list_subcommands() -> str:
    width = max(map(len, SUBCOMMANDS))
    return "\n".join(f"{k:<{width}}  {v.summary}\n{'':<{width}}  reproduces: {v.reproduces}"
                     for k, v in SUBCOMMANDS.items())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="su11",
        description="Run a displacement-detection or network-characterization experiment.",
        epilog=f"Output directory defaults to ${OUT_ENV}, else ./{DEFAULT_OUT}.",
    )
    parser.add_argument("subcommand", nargs="?", help="experiment to run (see --list)")
    parser.add_argument("--config", help="JSON experiment config with \"schema\": 1")
    parser.add_argument("--seed", type=int, help="64-bit seed (default 1)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--trials", type=int, help="number of trials or runs")
    parser.add_argument("--workers", type=int, help="worker threads (default: all cores)")
    parser.add_argument("--list", action="store_true", help="list subcommands and what each reproduces")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        print(list_subcommands())
        return EXIT_OK
    try:
        config = resolve(args)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidStateError as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except plon.InsufficientSamplesError as exc:
        print(f"FAIL  {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
