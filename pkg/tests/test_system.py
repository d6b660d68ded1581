import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmcast.channel import ChannelParams, generate_channel
from mmcast.system import (
    DIGITAL, HYBRID, HybridSolution, PhaseAlphabet, SystemConfig,
    feasibility_violations, initial_solution, is_feasible, min_snr,
    power_normalize_digital, project_to_alphabet, random_feasible,
    snr, spectral_efficiency, user_snrs,
)

from conftest import crandn, random_instance


def scalar_solution(f=1.0, m=1.0, w=1.0):
    return HybridSolution(np.array([[f]], complex), np.array([m], complex),
                          np.array([[w]], complex))


class TestConfig:
    def test_deltas(self):
        cfg = SystemConfig(n_tx=15, n_rx=2, n_rf=6, k_users=30)
        assert cfg.delta_tx == 1 / 90
        assert cfg.delta_rx == 0.01 / 2

    def test_defaults(self):
        cfg = SystemConfig(n_tx=2, n_rx=1, n_rf=1, k_users=1)
        assert (cfg.l_tx, cfg.l_rx, cfg.p_tx_max, cfg.p_rx_max, cfg.sigma2) == (8, 4, 1.0, 0.01, 1.0)

    @pytest.mark.parametrize("kw", [
        dict(n_rf=5), dict(l_tx=1), dict(sigma2=0.0), dict(p_rx_max=-1.0), dict(k_users=0),
    ])
    def test_validation(self, kw):
        base = dict(n_tx=4, n_rx=2, n_rf=2, k_users=3)
        base.update(kw)
        with pytest.raises(ValueError):
            SystemConfig(**base)

    def test_digital_copy(self):
        cfg = SystemConfig(n_tx=8, n_rx=2, n_rf=2, k_users=3).digital()
        assert cfg.n_rf == 8


class TestSnr:
    def test_zero_channel(self):
        sol = scalar_solution()
        assert snr(np.zeros((1, 1)), sol, 0, 1.0) == 0.0

    def test_scalar(self):
        assert snr(np.ones((1, 1)), scalar_solution(), 0, 1.0) == 1.0

    def test_substitution(self):
        # |w^H H F m|^2 = 0.01 and ||w||^2 = 0.01 give SNR 1
        sol = scalar_solution(w=0.1)
        assert abs(snr(np.ones((1, 1)), sol, 0, 1.0) - 1.0) < 1e-12

    def test_zero_combiner(self):
        with pytest.raises(ValueError):
            snr(np.ones((1, 1)), scalar_solution(w=0.0), 0, 1.0)

    def test_min_snr_matches_loop(self):
        cfg, ch, sol = random_instance(5, k=7)
        loop = min(snr(ch.H[k], sol, k, cfg.sigma2) for k in range(7))
        assert abs(min_snr(ch, sol, cfg.sigma2) - loop) < 1e-12 * loop
        assert min_snr(ch, sol, cfg.sigma2) <= np.mean(user_snrs(ch.H, sol.F, sol.m, sol.W, 1.0))

    def test_single_user(self):
        cfg, ch, sol = random_instance(6, k=1)
        assert min_snr(ch, sol, 1.0) == snr(ch.H[0], sol, 0, 1.0)

    def test_denominator_is_p_rx(self):
        cfg, ch, sol = random_instance(8)
        pw = np.sum(np.abs(sol.W) ** 2, axis=1)
        assert np.allclose(pw, cfg.p_rx_max, rtol=1e-12, atol=0)


class TestSpectralEfficiency:
    def test_examples(self):
        assert spectral_efficiency([0, 0, 0]) == 0
        assert spectral_efficiency([1.0] * 50) == 50
        assert spectral_efficiency([3.0, 1.0]) == 3

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            spectral_efficiency([-0.1])

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=5), st.integers(0, 4), st.floats(0, 10))
    def test_monotone(self, snrs, idx, bump):
        idx %= len(snrs)
        up = list(snrs)
        up[idx] += bump
        assert spectral_efficiency(up) >= spectral_efficiency(snrs)


class TestProjection:
    def test_positive_real(self):
        a = PhaseAlphabet(np.sqrt(0.1), 8)
        assert project_to_alphabet(0.3, a) == a.points[0]

    def test_minus_one(self):
        a = PhaseAlphabet(1.0, 4)
        assert a.index(-1.0) == 2

    def test_midpoint_tie_goes_low(self):
        a = PhaseAlphabet(1.0, 8)
        assert a.index(np.exp(1j * np.pi / 8)) == 0
        assert a.index(np.exp(1j * 3 * np.pi / 8)) == 1

    def test_wraparound_tie(self):
        a = PhaseAlphabet(1.0, 4)
        # halfway between l=3 and l=0 goes to l=0
        assert a.index(np.exp(-1j * np.pi / 4)) == 0

    def test_zero_maps_to_first_point(self):
        a = PhaseAlphabet(0.5, 8)
        assert project_to_alphabet(0.0, a) == a.points[0]

    def test_exact_membership(self):
        a = PhaseAlphabet(np.sqrt(1 / 90), 8)
        z = a.project(crandn(np.random.default_rng(0), 20))
        assert np.all(a.contains(z))
        assert not np.any(a.contains(z * (1 + 1e-12)))

    @settings(max_examples=200)
    @given(st.floats(-50, 50), st.floats(0.01, 10), st.sampled_from([2, 4, 8, 16]))
    def test_idempotent_and_close(self, phase, mag, L):
        a = PhaseAlphabet(0.7, L)
        z = mag * np.exp(1j * phase)
        p = a.project(z)
        assert a.project(p) == p
        d = np.angle(p / z)
        assert abs(d) <= np.pi / L + 1e-9

    def test_vectorized(self):
        a = PhaseAlphabet(1.0, 4)
        z = np.array([[1, 1j], [-1, -1j]])
        assert np.array_equal(a.index(z), [[0, 1], [2, 3]])


class TestPowerNormalize:
    def test_halving(self):
        F = np.eye(2)
        m = np.array([2.0, 0.0])
        assert np.allclose(power_normalize_digital(m, F, 1.0), [1.0, 0.0])

    def test_idempotent(self, rng):
        F, m = crandn(rng, 5, 3), crandn(rng, 3)
        m1 = power_normalize_digital(m, F, 1.0)
        assert np.allclose(power_normalize_digital(m1, F, 1.0), m1, rtol=1e-12, atol=0)

    def test_residual(self, rng):
        F, m = crandn(rng, 6, 2), crandn(rng, 2)
        out = power_normalize_digital(m, F, 2.5)
        assert abs(np.linalg.norm(F @ out) ** 2 - 2.5) < 1e-12 * 2.5

    def test_zero_product(self):
        with pytest.raises(ValueError):
            power_normalize_digital(np.array([1.0, -1.0]), np.ones((2, 2)), 1.0)


class TestRandomFeasible:
    @pytest.mark.parametrize("mode", [HYBRID, DIGITAL])
    def test_feasible(self, mode):
        cfg = SystemConfig(n_tx=8, n_rx=3, n_rf=3, k_users=5)
        if mode == DIGITAL:
            cfg = cfg.digital()
        sol = random_feasible(cfg, np.random.default_rng(1), mode)
        assert feasibility_violations(sol, cfg) == []

    def test_deterministic(self):
        cfg = SystemConfig(n_tx=4, n_rx=2, n_rf=2, k_users=3)
        a = random_feasible(cfg, np.random.default_rng(4))
        b = random_feasible(cfg, np.random.default_rng(4))
        assert np.array_equal(a.F, b.F) and np.array_equal(a.m, b.m) and np.array_equal(a.W, b.W)

    def test_phase_histogram_uniform(self):
        cfg = SystemConfig(n_tx=10, n_rx=2, n_rf=10, k_users=1)
        rng = np.random.default_rng(11)
        counts = np.zeros(8)
        draws = 0
        while draws < 10_000:
            F = random_feasible(cfg, rng).F.ravel()
            counts += np.bincount(cfg.tx_alphabet.index(F), minlength=8)
            draws += F.size
        p = 1 / 8
        sd = np.sqrt(draws * p * (1 - p))
        assert np.all(np.abs(counts - draws * p) <= 3 * sd)


class TestInitialSolution:
    def test_pattern(self):
        cfg = SystemConfig(n_tx=5, n_rx=2, n_rf=2, k_users=3)
        sol = initial_solution(cfg)
        nz = np.argwhere(sol.F != 0)
        assert [tuple(x) for x in nz] == [(0, 1), (1, 0), (2, 1), (3, 0), (4, 1)]
        assert np.allclose(sol.F[sol.F != 0], np.sqrt(cfg.delta_tx))
        assert np.array_equal(sol.m, [1, 0]) and np.all(sol.W[:, 0] == 1)

    def test_not_yet_feasible(self):
        cfg = SystemConfig(n_tx=4, n_rx=2, n_rf=2, k_users=2)
        assert not is_feasible(initial_solution(cfg), cfg)


class TestFeasibility:
    def test_detects_each_violation(self):
        cfg, ch, sol = random_instance(3)
        assert is_feasible(sol, cfg)
        bad_F = sol.F.copy()
        bad_F[0, 0] *= np.exp(0.1j)
        assert any("analog" in v for v in feasibility_violations(HybridSolution(bad_F, sol.m, sol.W), cfg))
        assert any("transmit power" in v for v in feasibility_violations(HybridSolution(sol.F, 2 * sol.m, sol.W), cfg))
        bad_W = sol.W.copy()
        bad_W[1, 0] *= 1j ** 0.5
        assert any("combiner" in v for v in feasibility_violations(HybridSolution(sol.F, sol.m, bad_W), cfg))

    def test_digital_requires_identity(self):
        cfg = SystemConfig(n_tx=3, n_rx=1, n_rf=3, k_users=1)
        sol = random_feasible(cfg, np.random.default_rng(0), DIGITAL)
        assert is_feasible(sol, cfg)
        twisted = HybridSolution(2 * sol.F, sol.m / 2, sol.W, DIGITAL)
        assert not is_feasible(twisted, cfg)

    def test_solution_shape_checks(self):
        with pytest.raises(ValueError):
            HybridSolution(np.eye(3), np.ones(2), np.ones((1, 1)))
        with pytest.raises(ValueError):
            HybridSolution(np.eye(2), np.ones(2), np.ones((1, 1)), mode="analog")
