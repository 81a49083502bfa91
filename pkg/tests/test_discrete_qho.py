import numpy as np
import pytest

from qhermite.discrete_qho import (
    EnergyProjector,
    apply_hamiltonian,
    build,
    continuum_matrix_element,
    dense_hamiltonian,
    dense_momentum_sq,
    discrete_matrix_element,
    hermite_basis,
    leakage_norm,
    poisson_tail,
)
from qhermite.spectral_core import GridSpec, centered_dft_matrix


@pytest.fixture(scope="module")
def qho128():
    return build(GridSpec(128))


class TestBuild:
    def test_max_diagonal(self):
        # sqrt(2*pi/8) * 4 = sqrt(4*pi), the ||xbar|| = sqrt(pi*M/2) norm at j = -M/2
        qho = build(GridSpec(8))
        assert abs(np.abs(qho.x).max() - np.sqrt(4 * np.pi)) < 1e-14
        assert abs(qho.operator_norm_x() - np.sqrt(np.pi * 8 / 2)) < 1e-14

    def test_x_annihilates_origin_delta(self):
        qho = build(GridSpec(8))
        v = np.zeros(8)
        v[4] = 1.0
        assert np.abs(qho.x * v).max() == 0.0

    def test_p_annihilates_uniform(self, qho128):
        # uniform is F of the origin delta, so pbar maps it to zero
        M = qho128.M
        v = np.full(M, 1 / np.sqrt(M), dtype=complex)
        from qhermite.spectral_core import centered_dft

        w = centered_dft(v, qho128.spec)
        w = qho128.x * w
        w = centered_dft(w, qho128.spec, inverse=True)
        assert np.abs(w).max() < 1e-12

    def test_rejects_tiny_grid(self):
        with pytest.raises(Exception):
            build(GridSpec(4))


class TestHamiltonian:
    def test_matches_dense(self, rng):
        M = 64
        qho = build(GridSpec(M))
        H = dense_hamiltonian(qho)
        v = rng.normal(size=M) + 1j * rng.normal(size=M)
        assert np.abs(apply_hamiltonian(qho, v) - H @ v).max() < 1e-12 * np.linalg.norm(H @ v)

    def test_dense_momentum_matches_fft_conjugation(self):
        M = 64
        F = centered_dft_matrix(M)
        x = GridSpec(M).points()
        P2 = F.conj().T @ np.diag(x * x) @ F
        assert np.abs(dense_momentum_sq(GridSpec(M)) - P2).max() < 1e-11

    def test_hermitian_on_random_pairs(self, qho128, rng):
        for _ in range(5):
            u = rng.normal(size=128) + 1j * rng.normal(size=128)
            v = rng.normal(size=128) + 1j * rng.normal(size=128)
            lhs = np.vdot(u, apply_hamiltonian(qho128, v))
            rhs = np.conj(np.vdot(v, apply_hamiltonian(qho128, u)))
            assert abs(lhs - rhs) < 1e-10 * abs(lhs)

    def test_zero_vector(self, qho128):
        assert np.abs(apply_hamiltonian(qho128, np.zeros(128))).max() == 0.0

    def test_ground_state_eigenvalue(self, qho128, basis_cache):
        psi0 = basis_cache(128, 0).state(0).astype(complex)
        out = apply_hamiltonian(qho128, psi0)
        assert np.linalg.norm(out - 0.5 * psi0) < 1e-9

    def test_excited_state_eigenvalue(self, qho128, basis_cache):
        psi5 = basis_cache(128, 5).state(5).astype(complex)
        out = apply_hamiltonian(qho128, psi5)
        # paper: eigenvalues very close to n + 1/2
        assert np.linalg.norm(out - 5.5 * psi5) < 1e-9

    def test_dimension_mismatch(self, qho128):
        with pytest.raises(ValueError):
            apply_hamiltonian(qho128, np.ones(64))


class TestDenseDiagonalize:
    def test_ground_energy(self, eig_cache):
        eig = eig_cache(64)
        assert abs(eig.energies[0] - 0.5) < 1e-10

    def test_first_gap(self, eig_cache):
        eig = eig_cache(64)
        assert abs(eig.energies[1] - eig.energies[0] - 1.0) < 1e-9

    def test_eigenvector_overlap_with_hermite_state(self, eig_cache, basis_cache):
        eig = eig_cache(128)
        psi0 = basis_cache(128, 0).state(0)
        assert abs(np.abs(np.vdot(eig.vectors[:, 0], psi0)) - 1.0) < 1e-10

    def test_residuals(self, eig_cache):
        qho = build(GridSpec(128))
        H = dense_hamiltonian(qho)
        eig = eig_cache(128)
        norm_H = np.abs(eig.energies).max()
        for n in (0, 3, 17, 127):
            r = np.linalg.norm(H @ eig.vectors[:, n] - eig.energies[n] * eig.vectors[:, n])
            assert r < 1e-8 * norm_H

    def test_spectrum_approaches_half_integers(self, eig_cache):
        # deviation shrinks by >= 10x per grid doubling for fixed n, down to
        # the float64 floor (the true error is doubly exponentially small and
        # falls below matrix-entry rounding already around M=64 for n <= 8)
        floor = 1e-12
        devs = []
        for M in (64, 128, 256):
            eig = eig_cache(M)
            devs.append(np.abs(eig.energies[:9] - (np.arange(9) + 0.5)).max())
        assert np.all(np.diff(eig_cache(64).energies) > 0)
        assert devs[1] < devs[0] / 10 or devs[1] < floor
        assert devs[2] < devs[1] / 10 or devs[2] < floor

    def test_budget_guard(self):
        with pytest.raises(ValueError):
            dense_hamiltonian(build(GridSpec(8192)))


class TestHermiteBasis:
    def test_ground_normalized(self, basis_cache):
        b = basis_cache(256, 0)
        assert abs(np.vdot(b.state(0), b.state(0)) - 1.0) < 1e-12

    def test_opposite_parity_orthogonal(self, basis_cache):
        b = basis_cache(256, 1)
        assert abs(np.vdot(b.state(0), b.state(1))) < 1e-14

    def test_gram_defect(self, basis_cache):
        b = basis_cache(256, 32)
        gram = b.gram()
        assert np.abs(gram - np.eye(33)).max() < 1e-10

    def test_rejects_n_max_at_dimension(self):
        with pytest.raises(ValueError):
            hermite_basis(GridSpec(16), 16)


class TestEnergyProjector:
    def test_idempotent_and_rank(self, eig_cache, rng):
        proj = EnergyProjector.from_eigen(eig_cache(64), 6)
        P = proj.matrix()
        assert np.abs(P @ P - P).max() < 1e-10
        assert abs(np.trace(P).real - 6) < 1e-10

    def test_realizations_agree(self, eig_cache, basis_cache):
        # eigenvector and Hermite-state forms agree to 1e-8 for N <= M/8
        M, N = 128, 16
        pe = EnergyProjector.from_eigen(eig_cache(M), N).matrix()
        ph = EnergyProjector.from_hermite(basis_cache(M, N - 1), N).matrix()
        assert np.abs(pe - ph).max() < 1e-8


class TestFactCheckSuite:
    def test_ladder_oracle_basics(self):
        # <0|x^2|0> = 1/2, <0|p^2|0> = 1/2, <1|x|0> = 1/sqrt(2)
        assert abs(continuum_matrix_element(2, 0, 0, 0) - 0.5) < 1e-14
        assert abs(continuum_matrix_element(0, 2, 0, 0) - 0.5) < 1e-14
        assert abs(continuum_matrix_element(1, 0, 1, 0) - 1 / np.sqrt(2)) < 1e-14
        # canonical commutator: the grid-represented momentum is -p_hat, so
        # <0|[x,p]|0> = -i in this convention (p^2 consumers never see it)
        comm = (continuum_matrix_element(1, 1, 0, 0)
                - np.conj(continuum_matrix_element(1, 1, 0, 0)))
        assert abs(comm + 1j) < 1e-14

    def test_discrete_matches_continuum(self, basis_cache):
        # |<psibar_k| x^a p^b |psibar_l> - continuum| <= 1e-8 for a,b <= 4, k,l <= 8
        M = 256
        qho = build(GridSpec(M))
        basis = basis_cache(M, 8)
        worst = 0.0
        for a in range(5):
            for b in range(5):
                for k in (0, 3, 8):
                    for l in (0, 5, 8):
                        d = discrete_matrix_element(qho, basis, a, b, k, l)
                        c = continuum_matrix_element(a, b, k, l)
                        worst = max(worst, abs(d - c))
        assert worst < 1e-8


class TestLeakage:
    def test_low_degree_positions_stay_low(self, eig_cache):
        # ||(I - Pi_32) x^a Pi_4|| <= 1e-8 for a <= 4 at M=256
        qho = build(GridSpec(256))
        eig = eig_cache(256)
        for a in range(1, 5):
            assert leakage_norm(qho, eig, a, N=4, n_prime=32) < 1e-8


class TestPoissonTail:
    @pytest.mark.parametrize("a", [2, 5, 10])
    def test_tail_bound(self, a):
        # sum_{k >= 3a} a^k/k! <= exp(-a/4): the normalized Poisson tail bound
        assert poisson_tail(a) <= np.exp(-a / 4.0)

    def test_direct_sum_value(self):
        # brute-force frozen check at a=2: sum_{k>=6} 2^k/k!
        import math

        expected = math.exp(2) - sum(2.0**k / math.factorial(k) for k in range(6))
        assert abs(poisson_tail(2) - expected) < 1e-12
