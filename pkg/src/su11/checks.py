"""Deterministic cross-checks between the Gaussian engine and the Fock oracle."""

from __future__ import annotations

import numpy as np

from . import fock as f
from . import gaussian as g

__all__ = [
    "COMMUTATION_RELATIONS",
    "lie_algebra_errors",
    "schmidt_error",
    "gaussian_fock_pair",
    "moment_discrepancies",
    "mach_zehnder_fock",
]

# (A, B, C, coefficient): [A, B] = coefficient * C
COMMUTATION_RELATIONS = [
    ("J1", "J2", "J3", 1j),
    ("J2", "J3", "J1", 1j),
    ("J3", "J1", "J2", 1j),
    ("K1", "K2", "K0", -1j),
    ("K2", "K0", "K1", 1j),
    ("K0", "K1", "K2", 1j),
]


def lie_algebra_errors(cutoff: int = 20) -> dict:
    """Max-entry error of each commutation relation on the interior subspace."""
    gens = f.build_generators(cutoff)
    idx = f.interior_indices(2, cutoff)
    errors = {}
    for a, b, c, coef in COMMUTATION_RELATIONS:
        diff = f.commutator(gens[a], gens[b]).matrix - coef * gens[c].matrix
        errors[f"[{a},{b}]"] = float(np.abs(diff[np.ix_(idx, idx)]).max())
    return errors


def schmidt_error(r: float = 0.5, cutoff: int = 20) -> float:
    """Max deviation of ``S_2(r)|0,0>`` from ``sum_n (-tanh r)^n / cosh r |n, n>`` on the interior subspace."""
    psi = f.expm_unitary(f.build_generators(cutoff)["K2"], 2 * r) @ f.vacuum_state(2, cutoff)
    n = np.arange(cutoff + 1)
    target = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    target[n, n] = (-np.tanh(r)) ** n / np.cosh(r)
    idx = f.interior_indices(2, cutoff)
    return float(np.abs(psi.amplitudes[idx] - target.ravel()[idx]).max())


def gaussian_fock_pair(name: str, cutoff: int, **p):
    """The same two-mode unitary as a symplectic map and as a Fock-space matrix."""
    if name == "squeeze1":
        return (g.squeeze1_op(2, p["mode"], p["r"]),
                f.expm_unitary(f.squeeze1_generator(2, cutoff, p["mode"]), -p["r"]))
    if name == "squeeze2":
        return g.squeeze2_op(2, 0, 1, p["r"]), f.expm_unitary(f.build_generators(cutoff)["K2"], 2 * p["r"])
    if name == "beamsplitter":
        return g.beamsplitter_op(2, 0, 1), f.expm_unitary(f.beamsplitter_generator(cutoff), np.pi / 2)
    if name == "displacement":
        return (g.displacement_op(2, p["mode"], p["gamma"]),
                f.expm_unitary(f.displacement_generator(2, cutoff, p["mode"], p["gamma"]), 1.0))
    if name == "rotation":
        return (g.rotation_op(2, p["mode"], p["theta"]),
                f.expm_unitary(f.phase_generator(2, cutoff, p["mode"]), p["theta"]))
    raise ValueError(f"unknown operation {name!r}")


DEFAULT_OPS = [
    ("squeeze1", {"mode": 0, "r": 0.3}),
    ("squeeze1", {"mode": 1, "r": -0.25}),
    ("squeeze2", {"r": 0.3}),
    ("beamsplitter", {}),
    ("displacement", {"mode": 1, "gamma": 0.5 - 0.3j}),
    ("rotation", {"mode": 0, "theta": 0.7}),
]

DEFAULT_INPUTS = [(0.0, 0.0), (1.2, -0.8j), (1.5 + 0.5j, 0.3)]


def moment_discrepancies(cutoff: int = 30, ops=DEFAULT_OPS, inputs=DEFAULT_INPUTS) -> list:
    """Apply each operation to coherent inputs in both representations and compare moments.

    Returns dicts with the operation, input, output mean photon number and the
    largest mean/covariance discrepancy.
    """
    rows = []
    for name, params in ops:
        op_g, op_f = gaussian_fock_pair(name, cutoff, **params)
        for amps in inputs:
            fock_in = f.coherent_state(amps, cutoff)
            gauss_in = g.coherent(amps)
            out = op_g(gauss_in)
            mean_f, cov_f = f.oracle_moments(op_f @ fock_in)
            photons = 0.5 * (np.trace(out.cov) + out.mean @ out.mean) - out.num_modes / 2
            err = max(np.abs(mean_f - out.mean).max(), np.abs(cov_f - out.cov).max())
            rows.append({"op": name, "params": {k: str(v) for k, v in params.items()},
                         "input": [str(a) for a in amps], "mean_photons": float(photons),
                         "discrepancy": float(err)})
    return rows


def mach_zehnder_fock(alpha: complex, phis, dark_port_r: float, cutoff: int = 30) -> np.ndarray:
    """``(<2 J_3>, Var(2 J_3))`` per phase of the squeezed-dark-port interferometer in Fock space.

    Returns an array of shape ``(len(phis), 2)``.
    """
    gens = f.build_generators(cutoff)
    psi = f.coherent_state([alpha, 0.0], cutoff)
    psi = f.expm_unitary(f.squeeze1_generator(2, cutoff, 1), dark_port_r) @ psi
    B = f.expm_unitary(gens["J2"], np.pi / 2)
    split = B @ psi
    j = 2 * gens["J3"].matrix
    out = []
    for phi in np.atleast_1d(phis):
        theta = 0.5 * (np.pi / 2 + phi)
        phase = f.expm_unitary(f.phase_generator(2, cutoff, 0), theta) @ f.expm_unitary(
            f.phase_generator(2, cutoff, 1), -theta)
        final = B.dag @ (phase @ split)
        if final.tail_mass > f.TAIL_TOL:
            raise ValueError("cutoff too small for this interferometer input")
        mean = f.expectation(final, j).real
        out.append((mean, f.expectation(final, j @ j).real - mean**2))
    return np.array(out)
