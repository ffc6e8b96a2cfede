import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kmslab import fock, quasifree as qf


def random_symbol(rng, modes):
    raw = rng.normal(size=(modes, modes)) + 1j * rng.normal(size=(modes, modes))
    herm = 0.5 * (raw + raw.conj().T)
    evals = np.linalg.eigvalsh(herm)
    scaled = (herm - evals.min() * np.eye(modes)) / (evals.max() - evals.min() + 1e-12)
    return qf.QuasifreeSymbol(scaled)


def random_state(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_symbol_rejects_out_of_range_eigenvalues():
    with pytest.raises(ValueError):
        qf.QuasifreeSymbol(np.diag([0.5, 1.5]).astype(complex))
    with pytest.raises(ValueError):
        qf.QuasifreeSymbol(np.diag([-0.2, 0.5]).astype(complex))
    with pytest.raises(ValueError):
        qf.QuasifreeSymbol(np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))


def test_vacuum_symbol_gives_vacuum_projector():
    rho = qf.quasifree_density_matrix(qf.QuasifreeSymbol(np.zeros((2, 2), dtype=complex)))
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 0] = 1.0
    assert np.allclose(rho.matrix, expected, atol=1e-14)


def test_half_filling_symbol_gives_maximally_mixed_state():
    rho = qf.quasifree_density_matrix(qf.QuasifreeSymbol(0.5 * np.eye(3, dtype=complex)))
    assert np.allclose(rho.matrix, np.eye(8) / 8.0, atol=1e-14)


def test_diagonal_symbol_two_point_expectations():
    rho = qf.quasifree_density_matrix(qf.QuasifreeSymbol(np.diag([0.8, 0.3]).astype(complex)))
    for j, expected in [(0, 0.8), (1, 0.3)]:
        num = fock.creator(j, 2) @ fock.annihilator(j, 2)
        assert fock.expectation(rho, num).real == pytest.approx(expected, abs=1e-12)


def test_wick_two_point_pattern_off_diagonal_symbol():
    rng = np.random.default_rng(12)
    symbol = random_symbol(rng, 3)
    rho = qf.quasifree_density_matrix(symbol)
    for _ in range(10):
        f = rng.normal(size=3) + 1j * rng.normal(size=3)
        g = rng.normal(size=3) + 1j * rng.normal(size=3)
        af = fock.smeared_annihilator(f, 3)
        ag = fock.smeared_annihilator(g, 3)
        got = fock.expectation(rho, af.dag() @ ag)
        # antilinear in the starred slot: <f|R|g>
        assert got == pytest.approx(f.conj() @ symbol.matrix @ g, abs=1e-10)


def test_binary_entropy_trivial_values():
    assert qf.binary_entropy_sum(
        qf.QuasifreeSymbol(0.5 * np.eye(4, dtype=complex))) == pytest.approx(
            4.0 * math.log(2.0), abs=1e-13)
    assert qf.binary_entropy_sum(
        qf.QuasifreeSymbol(np.diag([0.0, 1.0]).astype(complex))) == pytest.approx(
            0.0, abs=1e-13)


def test_binary_entropy_scalar_oracle():
    val = qf.binary_entropy_sum(qf.QuasifreeSymbol(np.diag([0.8, 0.3]).astype(complex)))
    oracle = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2)) \
        - (0.3 * math.log(0.3) + 0.7 * math.log(0.7))
    assert val == pytest.approx(oracle, abs=1e-14)
    assert val == pytest.approx(1.111266, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31),
       modes=st.integers(min_value=1, max_value=5))
def test_binary_entropy_matches_spectral_entropy(seed, modes):
    symbol = random_symbol(np.random.default_rng(seed), modes)
    rho = qf.quasifree_density_matrix(symbol)
    assert abs(qf.binary_entropy_sum(symbol) - qf.von_neumann_entropy(rho)) <= 1e-10


def test_pinch_fixes_configuration_diagonal_states():
    symbol = qf.QuasifreeSymbol(np.diag([0.9, 0.2]).astype(complex))
    diag = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    assert np.allclose(qf.pinch(diag, symbol), diag, atol=1e-13)


def test_pinch_collapses_coherence_to_classical_mixture():
    symbol = qf.QuasifreeSymbol(np.diag([0.5, 0.5]).astype(complex))
    # equal superposition of the two singly-occupied configurations
    vec = np.zeros(4, dtype=complex)
    vec[1] = vec[2] = 1.0 / math.sqrt(2.0)
    rho = np.outer(vec, vec.conj())
    pinched = qf.pinch(rho, symbol)
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 1] = expected[2, 2] = 0.5
    assert np.allclose(pinched, expected, atol=1e-13)


def test_pinch_preserves_trace_and_raises_entropy():
    rng = np.random.default_rng(21)
    symbol = random_symbol(rng, 3)
    for _ in range(10):
        rho = random_state(rng, 8)
        pinched = qf.pinch(rho, symbol)
        assert np.trace(pinched).real == pytest.approx(1.0, abs=1e-12)
        assert qf.von_neumann_entropy(pinched) >= qf.von_neumann_entropy(rho) - 1e-12


def test_relative_entropy_of_identical_states_is_zero():
    rng = np.random.default_rng(31)
    rho = random_state(rng, 4)
    assert qf.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)


def test_relative_entropy_pure_against_tracial():
    pure = np.zeros((8, 8), dtype=complex)
    pure[0, 0] = 1.0
    assert qf.relative_entropy(pure, np.eye(8) / 8.0) == pytest.approx(
        3.0 * math.log(2.0), abs=1e-12)


def test_relative_entropy_support_flag():
    pure = np.diag([1.0, 0.0]).astype(complex)
    other = np.diag([0.0, 1.0]).astype(complex)
    assert qf.relative_entropy(pure, other) == math.inf


def test_relative_entropy_matches_independent_spectral_route():
    rng = np.random.default_rng(41)
    for _ in range(10):
        rho, sigma = random_state(rng, 4), random_state(rng, 4)
        got = qf.relative_entropy(rho, sigma)
        # independent spectral computation via matrix logarithms
        er, vr = np.linalg.eigh(rho)
        es, vs = np.linalg.eigh(sigma)
        log_rho = vr @ np.diag(np.log(np.clip(er, 1e-300, None))) @ vr.conj().T
        log_sigma = vs @ np.diag(np.log(np.clip(es, 1e-300, None))) @ vs.conj().T
        oracle = np.trace(rho @ (log_rho - log_sigma)).real
        assert got == pytest.approx(oracle, abs=1e-10)
        assert got >= -1e-10


def test_relative_entropy_joint_convexity_spot_check():
    rng = np.random.default_rng(51)
    rhos = [random_state(rng, 4) for _ in range(3)]
    sigmas = [random_state(rng, 4) for _ in range(3)]
    lam = np.array([0.5, 0.3, 0.2])
    mixed_rho = sum(l * r for l, r in zip(lam, rhos))
    mixed_sigma = sum(l * s for l, s in zip(lam, sigmas))
    mixture_value = qf.relative_entropy(mixed_rho, mixed_sigma)
    average_value = sum(
        l * qf.relative_entropy(r, s) for l, r, s in zip(lam, rhos, sigmas))
    assert mixture_value <= average_value + 1e-10


def test_entropy_dominance_identity_on_random_batch():
    rng = np.random.default_rng(61)
    symbol = random_symbol(rng, 3)
    for _ in range(50):
        rho = random_state(rng, 8)
        s_rho, s_pinched, dominated = qf.entropy_dominance_check(rho, symbol)
        assert dominated
        rel = qf.relative_entropy(rho, qf.pinch(rho, symbol))
        assert rel == pytest.approx(s_pinched - s_rho, abs=1e-9)


def test_entropy_dominance_equality_for_diagonal_state():
    symbol = qf.QuasifreeSymbol(np.diag([0.6, 0.4]).astype(complex))
    diag = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    s_rho, s_pinched, dominated = qf.entropy_dominance_check(diag, symbol)
    assert dominated
    assert s_rho == pytest.approx(s_pinched, abs=1e-12)


def test_entropy_dominance_pure_state():
    rng = np.random.default_rng(71)
    vec = rng.normal(size=8) + 1j * rng.normal(size=8)
    vec /= np.linalg.norm(vec)
    rho = np.outer(vec, vec.conj())
    symbol = random_symbol(rng, 3)
    s_rho, s_pinched, dominated = qf.entropy_dominance_check(rho, symbol)
    assert dominated
    assert s_rho == pytest.approx(0.0, abs=1e-10)
    assert s_pinched >= 0.0


def test_subadditivity_of_reduced_states():
    rng = np.random.default_rng(81)
    for _ in range(10):
        rho = random_state(rng, 16)
        s_ab = qf.von_neumann_entropy(rho)
        s_a = qf.von_neumann_entropy(fock.partial_trace(rho, [0, 1], mode_count=4).matrix)
        s_b = qf.von_neumann_entropy(fock.partial_trace(rho, [2, 3], mode_count=4).matrix)
        assert s_ab <= s_a + s_b + 1e-10


def test_certificate_power_law_pass():
    # rho_n = n^-2 / 2 sits strictly below n^-2
    vals = np.array([0.5 * n**-2.0 for n in range(1, 7)])
    cert = qf.trace_class_certificate(
        qf.QuasifreeSymbol(np.diag(vals).astype(complex)), c=1.0, epsilon=1.0)
    assert cert.passed
    assert cert.entropy_bound is not None and cert.entropy_bound > 0.0


def test_certificate_flat_symbol_fails_at_second_level():
    cert = qf.trace_class_certificate(
        qf.QuasifreeSymbol(0.5 * np.eye(6, dtype=complex)), c=1.0, epsilon=1.0)
    assert not cert.passed
    assert cert.worst_n >= 2
    assert cert.entropy_bound is None


def test_certificate_validation():
    sym = qf.QuasifreeSymbol(0.5 * np.eye(2, dtype=complex))
    with pytest.raises(ValueError):
        qf.trace_class_certificate(sym, c=0.0, epsilon=1.0)
    with pytest.raises(ValueError):
        qf.trace_class_certificate(sym, c=1.0, epsilon=0.0)


def test_certificate_json_roundtrip():
    vals = np.array([0.5 * n**-2.0 for n in range(1, 5)])
    cert = qf.trace_class_certificate(
        qf.QuasifreeSymbol(np.diag(vals).astype(complex)), c=1.0, epsilon=1.0)
    back = qf.TraceClassCertificate.from_json(cert.to_json())
    assert back == cert


def test_fermi_dirac_symbol_values():
    sym = qf.fermi_dirac_symbol([0.0, 1.0], beta=1.0)
    diag = np.real(np.diag(sym.matrix))
    assert diag[0] == pytest.approx(0.5, abs=1e-14)
    assert diag[1] == pytest.approx(1.0 / (1.0 + math.e), abs=1e-14)
    tracial = qf.fermi_dirac_symbol([0.3, 2.0, 5.0], beta=0.0)
    assert np.allclose(np.diag(tracial.matrix), 0.5, atol=1e-14)


def test_fermi_dirac_symbol_handles_extreme_energies():
    sym = qf.fermi_dirac_symbol([1e4, -1e4], beta=10.0)
    diag = np.real(np.diag(sym.matrix))
    assert diag[0] == pytest.approx(0.0, abs=1e-15)
    assert diag[1] == pytest.approx(1.0, abs=1e-15)


def test_symbol_file_roundtrip(tmp_path):
    rng = np.random.default_rng(91)
    symbol = random_symbol(rng, 4)
    path = tmp_path / "symbol.txt"
    qf.save_symbol(path, symbol)
    back = qf.load_symbol(path)
    assert np.allclose(back.matrix, symbol.matrix, atol=0.0)


def test_symbol_file_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2\n1.0 0.0\n")
    with pytest.raises(ValueError):
        qf.load_symbol(path)
