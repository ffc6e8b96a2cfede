import numpy as np
import pytest

from kmslab import fock, kms, toychain as tc
from kmslab.quasifree import von_neumann_entropy


def random_coupling(rng, d):
    raw = rng.normal(size=(d,) * 4) + 1j * rng.normal(size=(d,) * 4)
    return tc.CouplingTensor(0.5 * (raw + np.conj(np.transpose(raw, (2, 3, 0, 1)))))


def test_coupling_hermiticity_enforced():
    bad = np.zeros((2, 2, 2, 2), dtype=complex)
    bad[0, 0, 1, 1] = 1.0  # conjugate partner [1,1,0,0] missing
    with pytest.raises(ValueError):
        tc.CouplingTensor(bad)
    good = np.zeros((2, 2, 2, 2), dtype=complex)
    good[0, 0, 1, 1] = 0.5
    good[1, 1, 0, 0] = 0.5
    tc.CouplingTensor(good)  # does not raise


def test_chain_spec_validation():
    zero = tc.CouplingTensor(np.zeros((4,) * 4))
    with pytest.raises(ValueError):
        tc.ToyChainSpec(1, 4, zero, beta=1.0)
    with pytest.raises(ValueError):
        tc.ToyChainSpec(7, 4, zero, beta=1.0)  # 4^7 above the envelope
    with pytest.raises(ValueError):
        tc.ToyChainSpec(2, 4, zero, beta=0.0)


def test_free_hamiltonian_diagonal_entries():
    spec = tc.ToyChainSpec(2, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=1.0)
    ham = tc.build_hamiltonian(spec)
    expected = [float(k1 + k2) for k1 in range(3) for k2 in range(3)]
    assert np.allclose(np.diag(ham).real, expected, atol=1e-15)
    assert np.max(np.abs(ham - np.diag(np.diag(ham)))) == 0.0


def test_hamiltonian_hermitian_for_random_couplings():
    rng = np.random.default_rng(0)
    for d, n in [(2, 2), (2, 3), (3, 2)]:
        spec = tc.ToyChainSpec(n, d, random_coupling(rng, d), beta=1.0)
        ham = tc.build_hamiltonian(spec)
        assert np.max(np.abs(ham - ham.conj().T)) <= 1e-12


def test_two_site_coupled_spectrum_against_direct_diagonalization():
    # single symmetric pair of entries: spectrum from an independent 4x4 build
    g = 0.3
    entries = {(0, 1, 0, 1): g, (0, 1, 0, 1): g}
    h = np.zeros((2,) * 4, dtype=complex)
    h[0, 1, 0, 1] = g  # self-conjugate pattern: h[k,l,r,m] = conj(h[r,m,k,l])
    coupling = tc.CouplingTensor(h)
    spec = tc.ToyChainSpec(2, 2, coupling, beta=1.0)
    ham = tc.build_hamiltonian(spec)

    # oracle: explicit sum of the two printed orderings on both ordered bonds
    unit01 = np.zeros((4, 4), dtype=complex)
    unit01[0 * 2 + 1, 0 * 2 + 1] = g          # |0><0| (x) |1><1|
    mirrored = np.zeros((4, 4), dtype=complex)
    mirrored[1 * 2 + 0, 1 * 2 + 0] = g        # |1><1| (x) |0><0|
    free = np.diag([0.0, 1.0, 1.0, 2.0])
    oracle = free + 2.0 * (unit01 + mirrored)  # two ordered bonds on two sites
    assert np.allclose(np.linalg.eigvalsh(ham), np.linalg.eigvalsh(oracle), atol=1e-12)


def test_local_derivative_free_case_is_diagonal_term():
    spec = tc.ToyChainSpec(3, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=1.0)
    for k in range(3):
        rep = tc.local_derivative(spec, k)
        assert rep.residual <= 1e-12
        assert np.max(np.abs(rep.left_term)) == 0.0
        assert np.max(np.abs(rep.right_term)) == 0.0
        # i[H, |k><0|_0] = i k |k><0|_0 for the bare chain; zero at k = 0
        scale = np.max(np.abs(rep.commutator))
        assert scale == pytest.approx(float(k), abs=1e-12)


def test_local_derivative_split_matches_commutator_random_couplings():
    rng = np.random.default_rng(1)
    for d, n in [(2, 2), (2, 3), (3, 2), (3, 3)]:
        for _ in range(10):
            spec = tc.ToyChainSpec(n, d, random_coupling(rng, d), beta=1.0)
            for k in range(d):
                assert tc.local_derivative(spec, k).residual <= 1e-10


def test_local_derivative_index_validation():
    spec = tc.ToyChainSpec(2, 2, tc.CouplingTensor(np.zeros((2,) * 4)), beta=1.0)
    with pytest.raises(ValueError):
        tc.local_derivative(spec, 5)


def test_coupling_condition_zero():
    report = tc.coupling_condition(tc.CouplingTensor(np.zeros((3,) * 4)), alpha=0.0)
    assert report.c_star == 0.0
    assert report.shift == 0.0


def test_coupling_condition_exponential_direct_sum_oracle():
    d = 12
    coupling = tc.exponential_coupling(d, 1.0, 1.0)
    report = tc.coupling_condition(coupling, alpha=0.0)
    # direct summation: s_k = e^-k (sum_j e^-j)^3, maximal at k = 0
    geom = sum(np.exp(-float(j)) for j in range(d))
    assert report.growth_norms[0] == pytest.approx(geom**3, rel=1e-12)
    assert report.c_star == pytest.approx(geom**3, rel=1e-12)
    # shift pieces are the level-preserving slices, by direct summation
    h = coupling.h
    assert report.shift_right == pytest.approx(np.abs(h[0, :, 0, :]).sum(), rel=1e-14)
    assert report.shift_left == pytest.approx(np.abs(h[0, :, :, 0]).sum(), rel=1e-14)


def test_coupling_condition_alpha_regularizes_level_zero():
    coupling = tc.exponential_coupling(6, 1.0, 1.0)
    r0 = tc.coupling_condition(coupling, alpha=0.0)
    rm1 = tc.coupling_condition(coupling, alpha=-1.0)
    assert rm1.c_star >= r0.c_star  # dividing by k^alpha <= 1 can only grow c*
    with pytest.raises(ValueError):
        tc.coupling_condition(coupling, alpha=0.5)


def test_occupation_profile_free_chain_matches_factorized_gibbs():
    beta = 1.0
    spec = tc.ToyChainSpec(2, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=beta)
    profile = tc.occupation_profile(spec)
    weights = np.exp(-beta * np.arange(3))
    expected = weights / weights.sum()
    assert np.allclose(profile.occupations, expected, atol=1e-13)
    assert profile.translation_spread <= 1e-12
    assert profile.satisfied()


def test_occupation_profile_probabilities_and_tails():
    rng = np.random.default_rng(2)
    spec = tc.ToyChainSpec(3, 3, random_coupling(rng, 3), beta=0.7)
    profile = tc.occupation_profile(spec)
    occ = profile.occupations
    assert np.all(occ >= -1e-12) and np.all(occ <= 1.0 + 1e-12)
    assert occ.sum() == pytest.approx(1.0, abs=1e-12)
    assert profile.tail_sums[0] == pytest.approx(occ[1:].sum(), abs=1e-14)
    assert profile.tail_sums[-1] == pytest.approx(0.0, abs=1e-15)


def test_occupation_profile_below_bounds_with_growth_condition():
    coupling = tc.exponential_coupling(4, 0.02, 1.0)
    spec = tc.ToyChainSpec(3, 4, coupling, beta=1.0)
    profile = tc.occupation_profile(spec)
    assert profile.bounds[0].vacuous          # level 0 carries no bound
    for occ, q in zip(profile.occupations[1:], profile.bounds[1:]):
        assert not q.vacuous
        assert occ <= q.w_bound
    assert profile.satisfied()
    assert profile.translation_spread <= 1e-10


def test_chain_gibbs_state_passes_equilibrium_gap_check():
    rng = np.random.default_rng(3)
    spec = tc.ToyChainSpec(2, 3, random_coupling(rng, 3), beta=1.0)
    ham = tc.build_hamiltonian(spec)
    rho = fock.thermal_density_matrix(ham, spec.beta)
    for k in range(1, spec.local_dim):
        unit = np.zeros((3, 3), dtype=complex)
        unit[0, k] = 1.0
        op = np.kron(unit, np.eye(3))
        rep = kms.kms_gap_matrices(rho, ham, spec.beta, op)
        assert rep.gap >= -1e-8


def test_window_entropy_free_chain_additive():
    spec = tc.ToyChainSpec(3, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=1.0)
    report = tc.local_entropy_report(spec, [1, 2])
    assert report.entropies[1] == pytest.approx(2.0 * report.entropies[0], abs=1e-11)
    assert report.subadditive(tol=1e-11)


def test_window_entropy_subadditive_coupled():
    rng = np.random.default_rng(4)
    spec = tc.ToyChainSpec(3, 3, random_coupling(rng, 3), beta=1.0)
    report = tc.local_entropy_report(spec, [1, 2, 3])
    assert report.subadditive(tol=1e-9)


def test_window_entropy_near_pure_global_state():
    # strong cooling leaves the unique ground state: full-window entropy ~ 0
    spec = tc.ToyChainSpec(2, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=40.0)
    report = tc.local_entropy_report(spec, [2])
    assert report.entropies[0] == pytest.approx(0.0, abs=1e-9)


def test_window_entropy_validation():
    spec = tc.ToyChainSpec(2, 2, tc.CouplingTensor(np.zeros((2,) * 4)), beta=1.0)
    with pytest.raises(ValueError):
        tc.local_entropy_report(spec, [3])


def test_truncation_drift_small_for_cold_chain():
    coupling = tc.exponential_coupling(3, 0.01, 1.0)
    spec = tc.ToyChainSpec(2, 3, coupling, beta=2.0)
    drift = tc.truncation_drift(spec)
    assert 0.0 <= drift < 5e-2


def test_chain_spec_file_roundtrip(tmp_path):
    path = tmp_path / "chain.ini"
    path.write_text(
        "[chain]\n"
        "n_sites = 3\n"
        "local_dim = 4\n"
        "beta = 1.5\n"
        "\n"
        "[coupling]\n"
        "preset = exponential\n"
        "strength = 0.05\n"
        "rate = 1.0\n"
    )
    spec = tc.load_chain_spec(path)
    assert spec.n_sites == 3 and spec.local_dim == 4 and spec.beta == 1.5
    assert spec.coupling.h[0, 0, 0, 0] == pytest.approx(0.05)


def test_chain_spec_file_explicit_entries(tmp_path):
    path = tmp_path / "chain.ini"
    path.write_text(
        "[chain]\n"
        "n_sites = 2\n"
        "local_dim = 2\n"
        "beta = 1.0\n"
        "\n"
        "[coupling]\n"
        "0,0,1,1 = 0.25\n"
        "1,1,0,0 = 0.25\n"
    )
    spec = tc.load_chain_spec(path)
    assert spec.coupling.h[0, 0, 1, 1] == pytest.approx(0.25)


def test_chain_spec_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "chain.ini"
    path.write_text("[chain]\nn_sites = 2\nlocal_dim = 2\nbeta = 1.0\nbogus = 3\n")
    with pytest.raises(ValueError):
        tc.load_chain_spec(path)


def test_occupation_profile_csv(tmp_path):
    spec = tc.ToyChainSpec(2, 3, tc.CouplingTensor(np.zeros((3,) * 4)), beta=1.0)
    profile = tc.occupation_profile(spec)
    out = tmp_path / "profile.csv"
    tc.write_occupation_profile_csv(out, profile)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "level,occupation,tail_sum,w_bound,vacuous_flag"
    assert len(lines) == 4
