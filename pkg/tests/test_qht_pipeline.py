import numpy as np
import pytest

from qhermite.calibration import Calibration
from qhermite.discrete_qho import build, dense_diagonalize, hermite_basis
from qhermite.qht_pipeline import (
    ConfigError,
    QHTConfig,
    WindowFunction,
    build_pr_state,
    choose_dimensions,
    eigenstate_filter,
    filter_unitaries,
    fixed_point_amplify,
    fixed_point_schedule,
    isometry_singular_values,
    loewdin_orthonormalize,
    pr_high_energy_leakage,
    pr_support,
    qht_apply,
    qht_reference,
    uncompute_index,
    window_value,
)
from qhermite.spectral_core import GridSpec


class TestChooseDimensions:
    def test_small_instance_defaults(self):
        # with the literal formula constants, N=1 eps=0.5 needs only M=16
        cfg = choose_dimensions(1, 0.5, Calibration.paper_scaling())
        assert cfg.M == 16
        assert cfg.N_high == 8

    def test_config_file_round_trip(self, tmp_path):
        from qhermite.qht_pipeline import config_from_json, config_to_json

        cfg = choose_dimensions(4, 0.05)
        path = tmp_path / "config.json"
        config_to_json(cfg, path)
        assert config_from_json(path) == cfg

    def test_n_high_formula(self):
        cfg = choose_dimensions(16, 0.1)
        assert cfg.N_high == 640

    def test_monotone_in_eps(self):
        prev = 0
        for eps in (0.5, 0.1, 0.05, 0.01):
            cfg = choose_dimensions(4, eps)
            assert cfg.M >= prev
            prev = cfg.M

    def test_hard_cap_reported(self):
        with pytest.raises(ConfigError):
            choose_dimensions(64, 1e-3, Calibration.paper_scaling(), hard_cap=1 << 16)

    def test_invalid_eps(self):
        with pytest.raises(ConfigError):
            choose_dimensions(4, 1.0)

    def test_acceptance_scale_instance(self):
        cfg = choose_dimensions(8, 0.01)
        assert cfg.M == 4096
        assert cfg.N < cfg.N_high < cfg.M


class TestWindow:
    def test_interior_is_one(self):
        assert window_value(10, 0.0) == 1.0
        assert window_value(0, 0.5) == 1.0

    def test_outside_is_zero(self):
        w = WindowFunction(10)
        assert window_value(10, w.x_max + 2 * w.delta) == 0.0
        assert window_value(10, -(w.x_max + 3 * w.delta)) == 0.0

    def test_band_center_half(self):
        w = WindowFunction(10)
        mid = w.x_max + w.delta
        val = window_value(10, mid)
        assert 0.0 < val < 1.0
        assert abs(val - 0.5) < 1e-10  # bump kernel is symmetric

    def test_band_endpoints_exact(self):
        w = WindowFunction(7)
        assert abs(window_value(7, w.x_max) - 1.0) < 1e-10
        assert abs(window_value(7, w.x_max + 2 * w.delta)) < 1e-10

    def test_monotone_on_band(self):
        w = WindowFunction(5)
        xs = np.linspace(w.x_max, w.x_max + 2 * w.delta, 101)
        vals = w.value(xs)
        assert np.all(np.diff(vals) <= 1e-12)


class TestPRStates:
    def test_support_size(self):
        cfg = QHTConfig(N=2, eps=0.1, M=2048, N_high=64)
        pr = build_pr_state(0, cfg)
        # J(0) = ceil(sqrt(0.75 * 1 * 2048 / (2 pi))) = 16
        assert pr.J == 16
        assert pr_support(0, 2048) == 16
        support = np.nonzero(pr.amplitudes)[0]
        assert support.min() >= 2048 // 2 - 16 and support.max() < 2048 // 2 + 16

    def test_ground_overlap(self, basis_cache):
        cfg = QHTConfig(N=1, eps=0.01, M=4096, N_high=64)
        pr = build_pr_state(0, cfg)
        psi0 = basis_cache(4096, 0).state(0)
        assert psi0 @ pr.amplitudes >= 0.6

    @pytest.mark.slow
    def test_paper_figure_point(self):
        # n=10, M=1e5: overlap 2/3 +- 0.05
        M = 100000
        cfg = QHTConfig(N=11, eps=0.01, M=M, N_high=1000)
        pr = build_pr_state(10, cfg)
        psi = hermite_basis(GridSpec(M), 10).state(10)
        assert abs(float(psi @ pr.amplitudes) - 2.0 / 3.0) <= 0.05

    def test_magnitude_bound_scaling(self):
        # max |phi_n| <= C n^(-1/4) with one fitted C across n in [4, 64];
        # the amplitude prefactor caps the ratio at 2^(1/4) sqrt(2/pi) ~ 0.95
        # reached at the window edge where sin(phi) = 1/2
        M = 65536
        cfg = QHTConfig(N=65, eps=0.01, M=M, N_high=1000)
        ratios = []
        for n in range(4, 65, 6):
            pr = build_pr_state(n, cfg)
            peak = np.abs(pr.amplitudes).max() / np.sqrt(GridSpec(M).h)
            ratios.append(peak * n**0.25)
        C = max(ratios)
        assert C <= 2**0.25 * np.sqrt(2 / np.pi) + 1e-6
        assert min(ratios) > 0.6  # flat in n: the n^(-1/4) law is the right shape

    def test_too_small_grid_rejected(self):
        # the oscillatory window only outgrows the grid for n ~ > 1.05 M
        cfg = QHTConfig(N=81, eps=0.1, M=64, N_high=70)
        with pytest.raises(ConfigError):
            build_pr_state(80, cfg)

    def test_stored_norm_matches(self):
        cfg = QHTConfig(N=4, eps=0.1, M=1024, N_high=128)
        pr = build_pr_state(3, cfg)
        assert abs(pr.norm - np.linalg.norm(pr.amplitudes)) < 1e-14


class TestEigenstateFilter:
    def test_keeps_matching_hermite_state(self, basis_cache):
        M, n = 512, 3
        cfg = QHTConfig(N=4, eps=0.01, M=M, N_high=64)
        psi = basis_cache(M, n).state(n).astype(complex)
        psi /= np.linalg.norm(psi)
        res = eigenstate_filter(psi, n, cfg)
        assert res.kept_norm >= 1 - 1e-4

    def test_rejects_mismatched_state(self, basis_cache):
        M = 512
        cfg = QHTConfig(N=4, eps=0.01, M=M, N_high=64)
        psi = basis_cache(M, 5).state(5).astype(complex)
        psi /= np.linalg.norm(psi)
        res = eigenstate_filter(psi, 2, cfg)
        assert res.kept_norm <= 1e-4

    def test_pr_state_retention_tracks_overlap(self, basis_cache):
        M, n = 2048, 2
        cfg = QHTConfig(N=4, eps=0.01, M=M, N_high=256)
        pr = build_pr_state(n, cfg)
        res = eigenstate_filter(pr.normalized(), n, cfg)
        psi = basis_cache(M, n).state(n)
        beta = abs(float(psi @ pr.amplitudes)) / pr.norm
        assert abs(res.kept_norm - beta) <= 2 * cfg.eps

    def test_interferometer_mass_conservation(self, rng):
        # materialize all 2^m ancilla branches at M=64 and check completeness
        M = 64
        cfg = QHTConfig(N=2, eps=0.1, M=M, N_high=16)
        apply_w = filter_unitaries(1, cfg)
        v = rng.normal(size=M) + 1j * rng.normal(size=M)
        v /= np.linalg.norm(v)
        branches = [v]
        for j in range(cfg.m_bits):
            nxt = []
            for b in branches:
                wb = apply_w(j, b)
                nxt.append(0.5 * (b + wb))
                nxt.append(0.5 * (b - wb))
            branches = nxt
        total = sum(float(np.vdot(b, b).real) for b in branches)
        assert abs(total - 1.0) < 1e-10
        kept = eigenstate_filter(v, 1, cfg)
        assert abs(float(np.vdot(branches[0], branches[0]).real) - kept.kept_norm**2) < 1e-12


class TestFixedPointAmplify:
    def test_schedule_degree(self):
        L, phases = fixed_point_schedule(0.5, 1e-3)
        assert L == 17 and len(phases) == 8

    def test_overlap_one_is_identity(self):
        init = np.array([1.0, 0.0], dtype=complex)
        out = fixed_point_amplify(lambda: init, lambda v: np.array([v[0], 0]), 0.5, 1e-3)
        assert np.allclose(out, init)

    def test_scalar_model_reaches_target(self):
        # a = 0.5, eps = 1e-3: final overlap >= 1 - 1e-3 with L <= 17
        a = 0.5
        init = np.array([a, np.sqrt(1 - a * a)], dtype=complex)

        def proj(v):
            out = v.copy()
            out[1] = 0.0
            return out

        L, _ = fixed_point_schedule(0.5, 1e-3)
        out = fixed_point_amplify(lambda: init, proj, 0.5, 1e-3)
        assert L <= 17
        assert abs(out[0]) >= 1 - 1e-3

    @pytest.mark.parametrize("a", [0.3, 0.45, 0.6, 0.8, 0.95])
    def test_no_overshoot_across_overlaps(self, a):
        init = np.array([a, np.sqrt(1 - a * a)], dtype=complex)

        def proj(v):
            out = v.copy()
            out[1] = 0.0
            return out

        out = fixed_point_amplify(lambda: init, proj, 0.3, 1e-2)
        assert abs(out[0]) >= 1 - 1e-2

    def test_two_block_shared_schedule(self):
        # blocks with different overlaps amplified by one schedule
        a0, a1 = 0.60, 0.72
        init = np.zeros(4, dtype=complex)
        init[0], init[1] = a0, np.sqrt(1 - a0**2)   # block 0: (goal, perp)
        init[2], init[3] = a1, np.sqrt(1 - a1**2)   # block 1
        init /= np.linalg.norm(init)

        def proj(v):
            out = v.copy()
            out[1] = 0.0
            out[3] = 0.0
            return out

        out = fixed_point_amplify(lambda: init, proj, 0.55, 1e-3)
        # per-block normalized overlap with each goal
        b0 = out[0] / np.sqrt(abs(out[0]) ** 2 + abs(out[1]) ** 2)
        b1 = out[2] / np.sqrt(abs(out[2]) ** 2 + abs(out[3]) ** 2)
        assert abs(b0) >= 1 - 1e-3 and abs(b1) >= 1 - 1e-3

    def test_rejects_bad_bound(self):
        with pytest.raises(ValueError):
            fixed_point_schedule(0.0, 1e-2)


class TestUncompute:
    def test_single_block_returns_to_zero(self, basis_cache):
        M, n = 256, 2
        cfg = QHTConfig(N=4, eps=0.01, M=M, N_high=64)
        psi = basis_cache(M, n).state(n).astype(complex)
        psi /= np.linalg.norm(psi)
        out, residual = uncompute_index({n: psi}, cfg)
        assert residual <= 1e-3
        assert abs(np.vdot(psi, out)) >= 1 - 1e-3

    def test_uniform_blocks(self, basis_cache):
        M = 256
        cfg = QHTConfig(N=4, eps=0.01, M=M, N_high=64)
        basis = basis_cache(M, 3)
        blocks = {}
        for n in range(4):
            psi = basis.state(n).astype(complex)
            blocks[n] = 0.5 * psi / np.linalg.norm(psi)
        out, residual = uncompute_index(blocks, cfg)
        target = sum(blocks.values())
        assert residual <= 4 * 0.01
        fid = abs(np.vdot(target / np.linalg.norm(target), out / np.linalg.norm(out)))
        assert fid >= 1 - 4 * 0.01

    def test_single_index_zero_phases(self, basis_cache):
        # N=1: all controlled phases reduce to the half-shift, exact up to
        # fast-forward error
        M = 256
        cfg = QHTConfig(N=1, eps=0.01, M=M, N_high=16)
        psi = basis_cache(M, 0).state(0).astype(complex)
        out, residual = uncompute_index({0: psi}, cfg)
        assert residual <= 1e-6


class TestEndToEnd:
    def test_single_index_fidelity(self, basis_cache):
        cfg = choose_dimensions(8, 0.01)
        basis = basis_cache(cfg.M, 7)
        e0 = np.zeros(8)
        e0[0] = 1.0
        res = qht_apply(e0, cfg)
        ref = qht_reference(e0, basis)
        fid = abs(np.vdot(ref / np.linalg.norm(ref), res.output))
        assert fid >= 1 - cfg.eps

    def test_uniform_fidelity_and_residual(self, basis_cache):
        cfg = choose_dimensions(8, 0.01)
        basis = basis_cache(cfg.M, 7)
        alpha = np.ones(8) / np.sqrt(8)
        res = qht_apply(alpha, cfg)
        ref = qht_reference(alpha, basis)
        fid = abs(np.vdot(ref / np.linalg.norm(ref), res.output))
        assert fid >= 1 - cfg.eps
        assert res.uncompute_residual <= cfg.eps
        assert np.all(res.block_fidelities >= 1 - cfg.eps)

    def test_linearity_regression(self, basis_cache):
        # the simulation is linear by construction; guard against an
        # accidental nonlinearity (e.g. normalization inside a block)
        cfg = choose_dimensions(4, 0.05)
        a = np.array([1.0, 0.0, 0.0, 0.0])
        b = np.array([0.0, 1.0, 0.0, 0.0])
        mix = (a + b) / np.sqrt(2)
        out_mix = qht_apply(mix, cfg).output
        out_sum = (qht_apply(a, cfg).output + qht_apply(b, cfg).output) / np.sqrt(2)
        assert np.abs(out_mix - out_sum).max() < 1e-10

    def test_isometry_band(self):
        cfg = choose_dimensions(4, 0.05)
        sv = isometry_singular_values(cfg)
        assert np.all(sv >= 1 - cfg.eps) and np.all(sv <= 1 + cfg.eps)

    def test_complex_amplitudes_ride_through(self, basis_cache):
        # relative phases in alpha must survive every stage (the blocks are
        # recombined coherently in the uncomputation)
        cfg = choose_dimensions(4, 0.05)
        basis = basis_cache(cfg.M, 3)
        alpha = np.array([0.5, 0.5j, -0.5, 0.5 * np.exp(1j * 0.7)])
        res = qht_apply(alpha, cfg)
        ref = qht_reference(alpha, basis)
        fid = abs(np.vdot(ref / np.linalg.norm(ref), res.output))
        assert fid >= 1 - cfg.eps

    def test_reference_basics(self, basis_cache):
        basis = basis_cache(256, 5)
        e3 = np.zeros(4)
        e3[3] = 1.0
        ref = qht_reference(e3, basis, signed=False)
        assert np.abs(ref - basis.state(3)).max() < 1e-14
        signed = qht_reference(e3, basis, signed=True)
        assert np.abs(signed + basis.state(3)).max() < 1e-14
        alpha = np.ones(4) / 2.0
        assert abs(np.linalg.norm(qht_reference(alpha, basis)) - 1.0) < 1e-8

    def test_loewdin_reference_isometric(self, basis_cache):
        basis = basis_cache(256, 7)
        rows = loewdin_orthonormalize(basis.states.astype(complex))
        gram = rows @ rows.conj().T
        assert np.abs(gram - np.eye(8)).max() < 1e-12

    def test_unnormalized_alpha_rejected(self):
        cfg = choose_dimensions(2, 0.1)
        with pytest.raises(ValueError):
            qht_apply(np.array([1.0, 1.0]), cfg)

    def test_oracle_bit_sweep(self, basis_cache):
        # r-bit rounding of the amplitude/phase oracles perturbs the prepared
        # state by O(2^-r); r ~ log2(1/eps) bits already keep the end-to-end
        # fidelity within budget, confirming the logarithmic-precision claim
        from dataclasses import replace

        base = choose_dimensions(4, 0.01)
        basis = basis_cache(base.M, 3)
        alpha = np.ones(4) / 2.0
        ref = qht_reference(alpha, basis)
        ref /= np.linalg.norm(ref)
        degraded = {}
        for r in (3, 7, 10, 24):
            cfg = replace(base, r=r, quantize_oracles=True)
            out = qht_apply(alpha, cfg).output
            degraded[r] = 1.0 - abs(np.vdot(ref, out))
        assert degraded[24] < degraded[3]
        assert degraded[7] <= base.eps          # log2(1/0.01) ~ 6.6 bits suffice
        assert degraded[24] <= 2 * base.eps**2 + 1e-4

        # quantized prepared state deviates by O(2^-r) from the exact one
        exact = build_pr_state(2, base).amplitudes
        for r in (4, 8, 12):
            rough = build_pr_state(2, base, quantize_bits=r).amplitudes
            assert np.abs(rough - exact).max() <= 4.0 * 2.0**-r

    def test_aa_rounds_override(self):
        from dataclasses import replace

        base = choose_dimensions(2, 0.05)
        e0 = np.zeros(2)
        e0[0] = 1.0
        full = qht_apply(e0, base).block_fidelities[0]
        # degree 1 means a bare preparation: the block fidelity collapses to
        # the unamplified filtered overlap (~0.88 here)
        bare = qht_apply(e0, replace(base, aa_rounds=1)).block_fidelities[0]
        assert full >= 1 - base.eps
        assert bare < 0.95
        for L in (3, 5, 9):
            amped = qht_apply(e0, replace(base, aa_rounds=L)).block_fidelities[0]
            assert amped >= 1 - 2 * base.eps

    @pytest.mark.slow
    def test_high_energy_leakage(self):
        # calibrated config at N=8, eps=0.1: prepared-state leakage past
        # N_high stays within eps
        cfg = choose_dimensions(8, 0.1)
        eig = dense_diagonalize(build(GridSpec(cfg.M)))
        for n in range(8):
            assert pr_high_energy_leakage(n, cfg, eig) <= cfg.eps
