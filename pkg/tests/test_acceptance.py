"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS/FAIL`` line through the
``verdict`` fixture; the lines are collected again in the terminal summary.
"""

import time

import numpy as np
from scipy import stats

from su11 import checks
from su11 import plon
from su11 import protocols as P

TRIALS = 100_000


def test_criterion_01_variance_recursion(verdict):
    start = time.perf_counter()
    worst = 0.0
    for sigma_sq in (0.5, 0.125):
        cfg = P.BaeSequenceConfig(sigma_sq, 0.5, rounds=50, trials=1000)
        rep = P.run_bae_homodyne(cfg, 1)
        exact = P.posterior_variance(sigma_sq, 0.5, np.arange(1, 51))
        worst = max(worst, np.abs(rep.extras["posterior_variances"] - exact).max())
    elapsed = time.perf_counter() - start
    verdict(1, "posterior variance recursion", worst <= 1e-10 and elapsed < 1.0,
            f"max error {worst:.1e} (<= 1e-10), {elapsed:.2f} s (< 1 s)")


def test_criterion_02_displacement_resolution(verdict):
    start = time.perf_counter()
    sigma_sq, gamma1 = 0.125, 0.1
    cfg = P.BaeSequenceConfig(sigma_sq, 0.5, P.impulse(10, 5, gamma1), 10, TRIALS)
    rep = P.run_bae_homodyne(cfg, 2)
    elapsed = time.perf_counter() - start
    k = cfg.target_round - 2
    mean_z = (rep.estimates[k] - gamma1) / np.sqrt(2 * sigma_sq / TRIALS)
    ok = abs(rep.z_score) < 3 and abs(mean_z) < 4 and elapsed < 30
    verdict(2, "BAE displacement resolution", ok,
            f"variance {rep.empirical_variance:.5f} vs {2 * sigma_sq} (z {rep.z_score:+.2f}), "
            f"mean z {mean_z:+.2f}, {elapsed:.1f} s")


def test_criterion_03_outcome_correlations(verdict):
    cfg = P.BaeSequenceConfig(0.125, 0.5, rounds=10, trials=TRIALS)
    rep = P.run_bae_homodyne(cfg, 3)
    _, _, z = P.outcome_covariance(rep.extras["outcomes"], 0.125, 0.5)
    worst = np.abs(z).max()
    verdict(3, "outcome covariance sigma^2 delta_jk + Sigma_0^2", worst < 5, f"max |z| {worst:.2f} (< 5) over 10x10")


def test_criterion_04_squeeze_conjugation(verdict):
    details, ok = [], True
    disp = P.impulse(10, 5, 0.1)
    for r in (0.3, np.log(2)):
        conj = P.run_squeeze_enhanced(P.BaeSequenceConfig(0.5, 0.5, disp, 10, TRIALS), r, 40)
        direct = P.run_bae_homodyne(P.BaeSequenceConfig(0.5 * np.exp(-2 * r), 0.5, disp, 10, TRIALS), 41)
        k = conj.extras["target_round"] - 2
        _, p_first = P.ks_equivalent(conj.extras["outcomes"][:, 0], direct.extras["outcomes"][:, 0])
        _, p_est = P.ks_equivalent(conj.samples[:, k], direct.samples[:, k])
        err = max(P.squeeze_conjugation_error(r, 0.5, y) for y in (-1.3, 0.0, 0.42, 2.0))
        ok &= p_first > 0.01 and p_est > 0.01 and err <= 1e-10
        details.append(f"r={r:.3f}: KS p {p_first:.3f}/{p_est:.3f}, posterior error {err:.1e}")
    verdict(4, "squeeze-conjugated vs direct homodyne", ok, "; ".join(details))


def test_criterion_05_circuit_identities(verdict):
    errs = P.circuit_identities(0.4, 0.3 - 0.2j)
    joint, local = P.run_measurement_identity(0.3 - 0.2j, 0.4, 0.5, TRIALS, 5)
    p = [P.ks_equivalent(joint[:, k], local[:, k])[1] for k in range(2)]
    worst = max(errs.values())
    ok = worst <= 1e-12 and min(p) > 0.01
    verdict(5, "beamsplitter circuit identities", ok,
            f"max matrix error {worst:.1e} (<= 1e-12), sampled readout KS p {p[0]:.3f}, {p[1]:.3f}")


def test_criterion_06_su11_arrows(verdict):
    r, worst = 0.6, 0.0
    for ga, gb in [(0.2 + 0.1j, 0.3 - 0.4j), (-0.5j, 0.1), (0.0, 0.7 + 0.2j)]:
        means, _ = P.su11_output_epr(ga, gb, r)
        worst = max(worst, abs(means.amplified - (np.conj(ga) + gb) * np.exp(r)),
                    abs(means.deamplified - (ga - np.conj(gb)) * np.exp(-r)))
    gamma = 0.3 + 0.2j
    means, _ = P.su11_output_epr(np.conj(gamma), gamma, r)
    amp_err = abs(means.amplified * np.exp(-r) - 2 * gamma)
    ok = worst <= 1e-10 and amp_err <= 1e-10 and abs(means.deamplified) <= 1e-10
    verdict(6, "SU(1,1) amplified and de-amplified EPR means", ok,
            f"arrow error {worst:.1e}; common signal gives amplified 2gamma (error {amp_err:.1e}), "
            f"de-amplified {abs(means.deamplified):.1e}")


def test_criterion_07_squeezed_heterodyne(verdict):
    r = 0.5
    cfg = P.BaeSequenceConfig(1.0, displacements=P.impulse(10, 5, 0.1), trials=TRIALS)
    rep = P.run_squeezed_heterodyne(cfg, r, 7)
    verdict(7, "squeezed-heterodyne estimator variance", abs(rep.z_score) < 3,
            f"{rep.empirical_variance:.5f} vs e^-2r = {np.exp(-2 * r):.5f} (z {rep.z_score:+.2f})")


def test_criterion_08_lie_algebra_oracle(verdict):
    lie = checks.lie_algebra_errors(20)
    schmidt = checks.schmidt_error(0.5, 20)
    worst = max(lie.values())
    verdict(8, "Fock-space commutators and Schmidt amplitudes", worst <= 1e-10 and schmidt <= 1e-8,
            f"{len(lie)} commutators max error {worst:.1e} (<= 1e-10), Schmidt error {schmidt:.1e} (<= 1e-8)")


def test_criterion_09_gaussian_fock_moments(verdict):
    start = time.perf_counter()
    rows = checks.moment_discrepancies(30)
    elapsed = time.perf_counter() - start
    worst = max(r["discrepancy"] for r in rows)
    photons = max(r["mean_photons"] for r in rows)
    ops = sorted({r["op"] for r in rows})
    ok = worst <= 1e-6 and photons <= 4 and elapsed < 60
    verdict(9, "Gaussian vs Fock moments", ok,
            f"{len(rows)} cases over {', '.join(ops)}; max discrepancy {worst:.1e} (<= 1e-6), "
            f"max mean photons {photons:.2f}, {elapsed:.1f} s (< 60 s)")


def test_criterion_10_phase_probe(verdict):
    r = 0.5
    const, lin, quad, resid = P.phase_probe_fit(r)
    expected_quad = np.sinh(2 * r) ** 2 / 4
    ok = abs(lin) < 1e-8 and resid < 1e-8 and abs(quad - expected_quad) < 1e-3 * expected_quad
    verdict(10, "K0 phase probe is second order", ok,
            f"linear {lin:.1e} (< 1e-8), quadratic {quad:.5f} vs sinh^2(2r)/4 = {expected_quad:.5f}, "
            f"fit residual {resid:.1e}")


def test_criterion_11_mach_zehnder(verdict):
    r = 0.5
    factors = {a: P.shot_noise_factor(a, r) for a in (2.0, 10.0, 100.0)}
    worst = max(abs(v - np.exp(-2 * r)) for v in factors.values())
    alpha = 100.0
    literal = P.run_mach_zehnder(alpha, 0.0, r)[1] / P.run_mach_zehnder(alpha, 0.0, 0.0)[1]
    phis = [0.0, 0.1, -0.2]
    fock = checks.mach_zehnder_fock(2.0, phis, r, cutoff=30)
    gauss = np.array([P.run_mach_zehnder(2.0, phi, r) for phi in phis])
    fock_err = np.abs(fock - gauss).max()
    ok = worst <= 1e-6 and fock_err <= 1e-6
    verdict(11, "Mach-Zehnder squeezed dark port", ok,
            f"power-proportional noise factor error {worst:.1e} (<= 1e-6); Fock match at |alpha|^2=4 "
            f"{fock_err:.1e}; total-variance ratio at |alpha|^2=1e4 is {literal:.8f} "
            f"(off e^-2r by {abs(literal - np.exp(-2 * r)):.1e})")


def test_criterion_12_plon_reconstruction(verdict):
    start = time.perf_counter()
    M, r = 4, float(np.arcsinh(np.sqrt(0.5)))
    L = plon.random_transfer_matrix(M, np.random.default_rng(2024))
    records = plon.sample_runs(L, r, plon.CHARACTERIZATION, 1_000_000, 12)
    rec = plon.reconstruct(records, r, truth=L, strict=False)
    elapsed = time.perf_counter() - start
    fids = np.array(rec.fidelities)
    N = len(records)
    ch2 = np.cosh(r) ** 2
    alice_z = (plon.alice_marginal_variance(records) - ch2) / (ch2 * np.sqrt(1.0 / (N - 1)))
    bob = records.bob
    bob_pred = np.sinh(r) ** 2 * np.linalg.norm(L, axis=0) ** 2
    bob_z = (bob.mean(0) - bob_pred) / (bob.std(0, ddof=1) / np.sqrt(N))
    ok = fids.min() >= 0.99 and np.abs(alice_z).max() < 3 and np.abs(bob_z).max() < 3 and elapsed < 600
    verdict(12, "entangled-pair network reconstruction", ok,
            f"min column fidelity {fids.min():.5f} (>= 0.99), Alice variance max |z| {np.abs(alice_z).max():.2f}, "
            f"Bob means max |z| {np.abs(bob_z).max():.2f}, {elapsed:.0f} s (< 600 s)")


def _se(p_hat, n):
    return np.sqrt(max(p_hat, 1.0 / n) * (1 - p_hat) / n)


def test_criterion_13_boson_sampling(verdict):
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    hom = plon.sample_runs(H, 0.8, plon.SAMPLING, 200_000, 131)
    pair = (hom.alice == 1).all(axis=1)
    n_pair = int(pair.sum())
    coinc = float((hom.bob[pair] == 1).all(axis=1).mean())
    hom_ok = coinc < 3 * _se(coinc, n_pair)

    eta = 0.6
    lossy = plon.sample_runs(np.diag([np.sqrt(eta), 1.0]), 0.5, plon.SAMPLING, 200_000, 132)
    one = (lossy.alice == [1, 0]).all(axis=1)
    vac = float((lossy.bob[one] == 0).all(axis=1).mean())
    lossy_ok = abs(vac - (1 - eta)) < 3 * _se(vac, int(one.sum()))

    p_values, forbidden = [], 0
    for M in (1, 2, 3):
        L = plon.random_transfer_matrix(M, np.random.default_rng(300 + M))
        report = plon.validate_sampling_runs(plon.sample_runs(L, 0.7, plon.SAMPLING, 200_000, 310 + M), L, 0.7)
        p_values += [pat["p_value"] for pat in report["patterns"]]
        forbidden += sum(pat["forbidden_hits"] for pat in report["patterns"])
    chi_ok = min(p_values) > 0.01 and forbidden == 0
    verdict(13, "boson-sampling runs vs permanents", hom_ok and lossy_ok and chi_ok,
            f"HOM coincidence {coinc:.1e} over {n_pair} pairs; lossy vacuum {vac:.4f} vs {1 - eta}; "
            f"{len(p_values)} patterns, min chi-square p {min(p_values):.3f}, forbidden hits {forbidden}")


def test_chi_square_p_values_look_uniform():
    """The per-pattern chi-square p-values should look uniform across patterns."""
    L = plon.random_transfer_matrix(3, np.random.default_rng(77))
    report = plon.validate_sampling_runs(plon.sample_runs(L, 0.7, plon.SAMPLING, 200_000, 78), L, 0.7)
    p = [pat["p_value"] for pat in report["patterns"]]
    assert stats.kstest(p, "uniform").pvalue > 0.001
