import math

import numpy as np
import pytest

from kmslab import fock, kms


def single_mode_number():
    return fock.creator(0, 1) @ fock.annihilator(0, 1)


def random_hermitian(rng, dim):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (raw + raw.conj().T)


def test_derivation_of_identity_vanishes():
    ham = single_mode_number()
    eye = fock.FockOperator(np.eye(2, dtype=complex), 1)
    assert np.max(np.abs(kms.derivation(ham, 0.0, eye).matrix)) <= 1e-15


def test_derivation_annihilator_is_eigenoperator():
    eps = 1.7
    ham = eps * single_mode_number()
    a = fock.annihilator(0, 1)
    delta_a = kms.derivation(ham, 0.0, a)
    assert np.allclose(delta_a.matrix, -1j * eps * a.matrix, atol=1e-14)


def test_derivation_adjoint_rule():
    rng = np.random.default_rng(2)
    ham = fock.FockOperator(random_hermitian(rng, 4), 2)
    op = fock.FockOperator(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)), 2)
    lhs = kms.derivation(ham, 0.0, op).dag().matrix
    rhs = kms.derivation(ham, 0.0, op.dag()).matrix
    assert np.allclose(lhs, rhs, atol=1e-13)          # delta(A)^+ = delta(A^+)
    assert not np.allclose(lhs, -rhs, atol=1e-6)      # and not the sign-flipped rule


def test_derivation_respects_chemical_potential():
    ham = fock.FockOperator(np.zeros((2, 2), dtype=complex), 1)
    a = fock.annihilator(0, 1)
    delta_a = kms.derivation(ham, 0.9, a)
    assert np.allclose(delta_a.matrix, -1j * 0.9 * a.matrix, atol=1e-14)


def test_gap_identity_observable():
    ens = fock.gibbs_state(single_mode_number(), beta=1.0)
    rep = kms.kms_gap(ens, fock.FockOperator(np.eye(2, dtype=complex), 1))
    assert rep.lhs == pytest.approx(0.0, abs=1e-14)
    assert rep.rhs == pytest.approx(0.0, abs=1e-14)
    assert rep.gap == pytest.approx(0.0, abs=1e-13)
    assert not rep.violation


def test_gap_single_mode_eigenoperator_closed_form():
    # annihilator at unit energy: left side -beta*w, right side w*log(w/(1-w))
    beta = 1.0
    ens = fock.gibbs_state(single_mode_number(), beta=beta)
    rep = kms.kms_gap(ens, fock.annihilator(0, 1))
    w = 1.0 / (1.0 + math.exp(beta))
    assert rep.u == pytest.approx(w, abs=1e-14)
    assert rep.v == pytest.approx(1.0 - w, abs=1e-14)
    assert rep.lhs == pytest.approx(-beta * w, abs=1e-14)
    assert rep.rhs == pytest.approx(w * math.log(w / (1.0 - w)), abs=1e-14)
    assert abs(rep.gap) <= 1e-13


def test_gap_tracial_state_beta_zero():
    rng = np.random.default_rng(11)
    ham = fock.FockOperator(random_hermitian(rng, 4), 2)
    ens = fock.gibbs_state(ham, beta=0.0)
    for _ in range(10):
        op = fock.FockOperator(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)), 2)
        rep = kms.kms_gap(ens, op)
        assert rep.u == pytest.approx(rep.v, abs=1e-12)
        assert rep.lhs == pytest.approx(0.0, abs=1e-13)
        assert rep.gap >= -1e-12


def test_gap_nonnegative_on_random_gibbs():
    rng = np.random.default_rng(3)
    for modes in (2, 3):
        dim = 2**modes
        ham = fock.FockOperator(random_hermitian(rng, dim), modes)
        for beta in (0.2, 1.0, 5.0):
            ens = fock.gibbs_state(ham, beta, mu=0.1)
            for _ in range(20):
                op = fock.FockOperator(
                    rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), modes)
                rep = kms.kms_gap(ens, op)
                assert rep.gap >= -1e-8
                assert rep.form_mismatch <= 1e-10


def test_gap_eigen_matrix_units_achieve_equality():
    rng = np.random.default_rng(4)
    ham = fock.FockOperator(random_hermitian(rng, 8), 3)
    ens = fock.gibbs_state(ham, beta=1.0)
    for _, unit in kms.eigen_matrix_units(ham.matrix)[:20]:
        rep = kms.kms_gap(ens, fock.FockOperator(unit, 3))
        assert abs(rep.gap) <= 1e-9


def test_gap_symmetric_form_agreement():
    rng = np.random.default_rng(5)
    ham = fock.FockOperator(random_hermitian(rng, 8), 3)
    ens = fock.gibbs_state(ham, beta=2.0, mu=-0.4)
    for _ in range(20):
        op = fock.FockOperator(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)), 3)
        rep = kms.kms_gap(ens, op)
        assert rep.form_mismatch <= 1e-10


def test_gap_rejects_zero_observable_and_infinite_beta():
    ens = fock.gibbs_state(single_mode_number(), beta=1.0)
    with pytest.raises(ValueError):
        kms.kms_gap(ens, fock.FockOperator(np.zeros((2, 2), dtype=complex), 1))
    with pytest.raises(ValueError):
        kms.kms_gap_matrices(np.eye(2) / 2, np.diag([0.0, 1.0]), math.inf,
                             fock.annihilator(0, 1))


def test_witness_none_for_gibbs():
    rng = np.random.default_rng(6)
    ham = fock.FockOperator(random_hermitian(rng, 4), 2)
    ens = fock.gibbs_state(ham, beta=1.0)
    candidates = [rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
                  for _ in range(50)]
    assert kms.kms_violation_witness(ens.rho.matrix, ham, candidates, beta=1.0) is None


def test_witness_ground_state_flags_infinite_right_side():
    # zero-temperature projector: creating a particle has u > 0, v = 0
    ham = single_mode_number()
    ground = np.diag([1.0, 0.0]).astype(complex)
    result = kms.kms_violation_witness(ground, ham, [fock.creator(0, 1)], beta=1.0)
    assert result is not None
    assert result.report.convention_case == kms.CASE_V_ZERO_U_POSITIVE
    assert result.report.violation


def test_witness_detects_beta_mismatch():
    ham = single_mode_number()
    wrong = fock.gibbs_state(ham, beta=2.0).rho.matrix
    units = [unit for _, unit in kms.eigen_matrix_units(ham.matrix)]
    result = kms.kms_violation_witness(wrong, ham, units, beta=1.0)
    assert result is not None
    assert result.report.gap < -1e-3


def test_sandwich_symmetry_point():
    s = kms.fermi_dirac_sandwich(0.0, 0.0, 0.0)
    assert s.w_lower == pytest.approx(0.5, abs=1e-15)
    assert s.w_upper == pytest.approx(0.5, abs=1e-15)


def test_sandwich_exact_value():
    s = kms.fermi_dirac_sandwich(1.0, 0.0, 0.0)
    assert s.w_lower == pytest.approx(1.0 / (1.0 + math.e), abs=1e-15)


def test_sandwich_perturbed_window():
    # two-sided window from the printed exponents, checked against mpmath-free
    # high-precision arithmetic: exp(1.1) and exp(0.9) to full double accuracy
    s = kms.fermi_dirac_sandwich(1.0, 0.0, 0.1)
    assert s.w_lower == pytest.approx(1.0 / (1.0 + math.exp(1.1)), rel=1e-15)
    assert s.w_upper == pytest.approx(1.0 / (1.0 + math.exp(0.9)), rel=1e-15)
    assert s.w_lower == pytest.approx(0.249739894405784, abs=1e-12)
    assert s.w_upper == pytest.approx(0.289050497374996, abs=1e-12)
    assert 0.0 < s.w_lower <= s.w_upper < 1.0


def test_sandwich_rejects_negative_bound():
    with pytest.raises(ValueError):
        kms.fermi_dirac_sandwich(1.0, 0.0, -0.1)


def test_sandwich_limit_harmonic_sequence():
    limit = kms.sandwich_limit_check(1.0, 0.0, [1.0 / n for n in range(1, 30)])
    assert limit == pytest.approx(1.0 / (1.0 + math.e), abs=1e-15)


def test_sandwich_limit_zero_sequence_has_zero_width():
    limit = kms.sandwich_limit_check(0.5, 0.2, [0.0, 0.0, 0.0])
    assert limit == pytest.approx(1.0 / (1.0 + math.exp(0.45)), abs=1e-15)
    s = kms.fermi_dirac_sandwich(0.5, 0.2, 0.0)
    assert s.width == 0.0


def test_sandwich_limit_dyadic_sequence_with_chemical_potential():
    limit = kms.sandwich_limit_check(2.0, -3.0, [2.0**-n for n in range(12)])
    assert limit == pytest.approx(1.0 / (1.0 + math.e), abs=1e-14)


def test_sandwich_limit_rejects_non_monotone():
    with pytest.raises(ValueError):
        kms.sandwich_limit_check(1.0, 0.0, [0.1, 0.5, 0.01])
