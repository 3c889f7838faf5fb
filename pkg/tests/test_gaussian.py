import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su11 import fock as f
from su11 import gaussian as g
from su11.gaussian import InvalidStateError


def test_vacuum_single_mode():
    s = g.vacuum(1)
    np.testing.assert_array_equal(s.mean, [0, 0])
    np.testing.assert_array_equal(s.cov, 0.5 * np.eye(2))


def test_vacuum_two_modes_and_symplectic_eigenvalues():
    s = g.vacuum(2)
    np.testing.assert_array_equal(s.mean, np.zeros(4))
    np.testing.assert_array_equal(s.cov, 0.5 * np.eye(4))
    np.testing.assert_allclose(s.symplectic_eigenvalues(), [0.5, 0.5])


def test_vacuum_rejects_zero_modes():
    with pytest.raises(ValueError):
        g.vacuum(0)


def test_state_rejects_uncertainty_violation():
    with pytest.raises(InvalidStateError):
        g.GaussianState(np.zeros(2), np.diag([0.1, 0.5]))


def test_state_rejects_asymmetric_covariance():
    with pytest.raises(InvalidStateError):
        g.GaussianState(np.zeros(2), np.array([[1.0, 0.2], [0.1, 1.0]]))


def test_state_rejects_mismatched_mean():
    with pytest.raises(ValueError):
        g.GaussianState(np.zeros(3), 0.5 * np.eye(2))


def test_state_arrays_are_read_only():
    s = g.vacuum(1)
    with pytest.raises(ValueError):
        s.mean[0] = 1.0


def test_displace_zero_is_identity():
    s = g.displace(g.vacuum(1), 0, 0)
    np.testing.assert_array_equal(s.mean, [0, 0])


def test_displace_shifts_quadratures():
    s = g.displace(g.vacuum(1), 0, (1 + 2j) / np.sqrt(2))
    np.testing.assert_allclose(s.mean, [1, 2], atol=1e-15)
    np.testing.assert_array_equal(s.cov, 0.5 * np.eye(2))


def test_displace_inverse():
    s = g.squeeze1(g.coherent([0.3 + 0.1j, -1j]), 1, 0.4)
    back = g.displace(g.displace(s, 1, 0.7 - 0.2j), 1, -0.7 + 0.2j)
    np.testing.assert_allclose(back.mean, s.mean, atol=1e-15)


def test_displace_mode_out_of_range():
    with pytest.raises(IndexError):
        g.displace(g.vacuum(2), 2, 1.0)


def test_squeeze1_zero_is_identity():
    s = g.coherent([0.5])
    np.testing.assert_array_equal(g.squeeze1(s, 0, 0.0).cov, s.cov)


def test_squeeze1_vacuum_variances():
    r = 0.7
    s = g.squeeze1(g.vacuum(1), 0, r)
    np.testing.assert_allclose(s.cov, np.diag([0.5 * np.exp(-2 * r), 0.5 * np.exp(2 * r)]))


def test_squeeze1_inverse():
    s = g.coherent([0.3 + 0.4j])
    back = g.squeeze1(g.squeeze1(s, 0, 0.9), 0, -0.9)
    np.testing.assert_allclose(back.mean, s.mean, atol=1e-14)
    np.testing.assert_allclose(back.cov, s.cov, atol=1e-14)


def test_squeeze1_rejects_non_finite():
    with pytest.raises(ValueError):
        g.squeeze1(g.vacuum(1), 0, np.inf)


def test_squeeze2_zero_is_identity():
    np.testing.assert_array_equal(g.squeeze2(g.vacuum(2), 0, 1, 0.0).cov, 0.5 * np.eye(4))


def test_squeeze2_epr_variances():
    r = 0.6
    _, cov = g.epr_variables(g.squeeze2(g.vacuum(2), 0, 1, r))
    np.testing.assert_allclose(np.diag(cov), 0.5 * np.exp([-2 * r, -2 * r, 2 * r, 2 * r]))


def test_squeeze2_marginal_is_thermal():
    r = 0.5
    s = g.squeeze2(g.vacuum(2), 0, 1, r)
    for m in (0, 1):
        np.testing.assert_allclose(s.mode_cov(m), 0.5 * np.cosh(2 * r) * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(0.5 * np.cosh(2 * r), 0.5 + np.sinh(r) ** 2)


def test_squeeze2_marginal_matches_fock_schmidt_form():
    r, cutoff = 0.5, 20
    psi = f.expm_unitary(f.build_generators(cutoff)["K2"], 2 * r) @ f.vacuum_state(2, cutoff)
    _, cov = f.oracle_moments(psi)
    np.testing.assert_allclose(cov[:2, :2], g.squeeze2(g.vacuum(2), 0, 1, r).mode_cov(0), atol=1e-7)


def test_squeeze2_rejects_same_mode():
    with pytest.raises(ValueError):
        g.squeeze2(g.vacuum(2), 1, 1, 0.3)


def test_beamsplit_vacuum_stays_vacuum():
    np.testing.assert_allclose(g.beamsplit(g.vacuum(2), 0, 1).cov, 0.5 * np.eye(4), atol=1e-15)


def test_beamsplit_coherent_amplitudes():
    a, b = 0.8 - 0.3j, -0.2 + 0.5j
    out = g.beamsplit(g.coherent([a, b]), 0, 1)
    np.testing.assert_allclose(g.complex_amplitudes(out.mean), [(a - b) / np.sqrt(2), (a + b) / np.sqrt(2)])


def test_beamsplit_inverse_restores_state():
    s = g.squeeze2(g.coherent([0.1, 0.4j]), 0, 1, 0.3)
    B = g.beamsplitter_op(2, 0, 1)
    back = B.inverse()(B(s))
    np.testing.assert_allclose(back.mean, s.mean, atol=1e-12)
    np.testing.assert_allclose(back.cov, s.cov, atol=1e-12)


def test_beamsplit_rejects_same_mode():
    with pytest.raises(ValueError):
        g.beamsplit(g.vacuum(2), 0, 0)


def test_rotation_rotates_amplitude():
    out = g.rotate(g.coherent([0.5]), 0, np.pi / 3)
    np.testing.assert_allclose(g.complex_amplitudes(out.mean), [0.5 * np.exp(1j * np.pi / 3)])


def test_squeeze_beamsplitter_identity():
    r = 0.37
    B = g.beamsplitter_op(2, 0, 1)
    local = g.squeeze1_op(2, 0, r) @ g.squeeze1_op(2, 1, -r)
    np.testing.assert_allclose((B.inverse() @ g.squeeze2_op(2, 0, 1, r) @ B).matrix, local.matrix, atol=1e-12)


def test_displacement_beamsplitter_identity():
    gamma = 0.4 - 0.9j
    B = g.beamsplitter_op(2, 0, 1)
    lhs = B @ g.displacement_op(2, 0, gamma) @ g.displacement_op(2, 1, gamma)
    rhs = g.displacement_op(2, 1, np.sqrt(2) * gamma) @ B
    np.testing.assert_allclose(lhs.matrix, rhs.matrix, atol=1e-12)
    np.testing.assert_allclose(lhs.shift, rhs.shift, atol=1e-12)


def test_composition_applies_right_operand_first():
    s = g.vacuum(1)
    D = g.displacement_op(1, 0, 1 / np.sqrt(2))
    S = g.squeeze1_op(1, 0, 0.5)
    np.testing.assert_allclose((S @ D)(s).mean, g.squeeze1(g.displace(s, 0, 1 / np.sqrt(2)), 0, 0.5).mean)


def test_epr_round_trip_explicit():
    v = g.EprVariables.from_quadratures(0.3, -1.2, 2.0, 0.7)
    np.testing.assert_allclose(v.to_quadratures(), [0.3, -1.2, 2.0, 0.7], atol=1e-12)


def test_epr_variables_amplified_pair():
    s = g.coherent([0.3 + 0.2j, -0.1 + 0.5j])
    means, _ = g.epr_variables(s)
    a, b = 0.3 + 0.2j, -0.1 + 0.5j
    np.testing.assert_allclose(means.amplified, np.conj(a) + b)
    np.testing.assert_allclose(means.deamplified, a - np.conj(b))


def test_quadratic_moments_vacuum():
    m = g.quadratic_moments(g.vacuum(2))
    assert m.j3x2_mean == pytest.approx(0.0, abs=1e-15)
    assert m.j3x2_var == pytest.approx(0.0, abs=1e-15)
    assert m.k0_mean == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0.5, 1.3 - 0.4j, 2.0])
def test_quadratic_moments_coherent_against_fock(alpha):
    cutoff = 30
    m = g.quadratic_moments(g.coherent([alpha, 0]))
    psi = f.coherent_state([alpha, 0], cutoff)
    j = 2 * f.build_generators(cutoff)["J3"].matrix
    assert m.j3x2_mean == pytest.approx(abs(alpha) ** 2, abs=1e-12)
    assert m.j3x2_mean == pytest.approx(f.expectation(psi, j).real, abs=1e-10)
    assert m.j3x2_var == pytest.approx(f.expectation(psi, j @ j).real - m.j3x2_mean**2, abs=1e-8)


def test_quadratic_moments_two_mode_squeezed_k0():
    r = 0.45
    m = g.quadratic_moments(g.squeeze2(g.vacuum(2), 0, 1, r))
    assert m.k0_mean == pytest.approx(np.sinh(r) ** 2 + 0.5, abs=1e-14)
    n = np.arange(200)
    fock_sum = np.sum(n * np.tanh(r) ** (2 * n) / np.cosh(r) ** 2) + 0.5
    assert m.k0_mean == pytest.approx(fock_sum, abs=1e-12)


def test_quadratic_moments_requires_two_modes():
    with pytest.raises(ValueError):
        g.quadratic_moments(g.vacuum(3))


def test_thermal_state():
    s = g.thermal([0.3, 1.0])
    np.testing.assert_allclose(np.diag(s.cov), [0.8, 0.8, 1.5, 1.5])


def test_batched_means_share_covariance():
    s = g.coherent([0.1]).broadcast(5)
    out = g.squeeze1(s, 0, 0.2)
    assert out.batch_shape == (5,)
    np.testing.assert_allclose(out.mean[3], g.squeeze1(g.coherent([0.1]), 0, 0.2).mean)


def test_insert_mode_and_reduced():
    s = g.squeeze2(g.vacuum(2), 0, 1, 0.3)
    t = s.insert_mode(1, np.array([1.0, 2.0]), 0.5 * np.eye(2))
    np.testing.assert_allclose(t.mode_mean(1), [1, 2])
    np.testing.assert_allclose(t.reduced([0, 2]).cov, s.cov)


# ---------------------------------------------------------------- properties

_op = st.tuples(
    st.sampled_from(["d", "s1", "s2", "b", "rot"]),
    st.integers(0, 2),
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
)


def _apply(state, op):
    kind, m, u, v = op
    other = (m + 1) % 3
    if kind == "d":
        return g.displace(state, m, u + 1j * v)
    if kind == "s1":
        return g.squeeze1(state, m, u)
    if kind == "s2":
        return g.squeeze2(state, m, other, u)
    if kind == "b":
        return g.beamsplit(state, m, other)
    return g.rotate(state, m, 3 * u)


@settings(max_examples=60, deadline=None)
@given(st.lists(_op, min_size=1, max_size=8))
def test_random_circuits_keep_states_valid_and_pure(ops):
    state = g.vacuum(3)
    for op in ops:
        state = _apply(state, op)
    assert state.symplectic_eigenvalues().min() >= 0.5 - 1e-10
    assert state.purity == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.lists(_op, min_size=1, max_size=8))
def test_compositions_are_symplectic(ops):
    total = g.identity_op(3)
    for kind, m, u, v in ops:
        other = (m + 1) % 3
        op = {
            "d": lambda: g.displacement_op(3, m, u + 1j * v),
            "s1": lambda: g.squeeze1_op(3, m, u),
            "s2": lambda: g.squeeze2_op(3, m, other, u),
            "b": lambda: g.beamsplitter_op(3, m, other),
            "rot": lambda: g.rotation_op(3, m, 3 * u),
        }[kind]()
        total = op @ total
    assert total.is_symplectic(1e-12 * max(1.0, np.abs(total.matrix).max() ** 2))


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_epr_round_trip(vals):
    v = g.EprVariables.from_quadratures(*vals)
    np.testing.assert_allclose(v.to_quadratures(), vals, atol=1e-12 * max(1.0, np.abs(vals).max()))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.5), st.floats(-1.0, 1.0))
def test_thermal_states_under_squeezing_stay_valid(nbar, r):
    s = g.squeeze1(g.thermal([nbar]), 0, r)
    np.testing.assert_allclose(s.symplectic_eigenvalues(), [nbar + 0.5], rtol=1e-10)
