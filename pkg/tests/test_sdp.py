import numpy as np
import pytest

from mmcast.linalg import principal_eigenpair
from mmcast.sdp import (
    INFEASIBLE, OPTIMAL, SdpProblem, real_embed, solve_maxmin_sdp,
)

from conftest import crandn, random_psd


def rank_one_family(seed, n, k):
    rng = np.random.default_rng(seed)
    return [np.outer(u, u.conj()) for u in crandn(rng, k, n)]


def random_hermitian(rng, n):
    a = crandn(rng, n, n)
    return a + a.conj().T


class TestRealEmbed:
    def test_identity(self):
        assert np.array_equal(real_embed(np.eye(3)), np.eye(6))

    def test_spectrum_doubles(self):
        lam = np.linalg.eigvalsh(real_embed(np.array([[0, 1j], [-1j, 0]])))
        assert np.allclose(lam, [-1, -1, 1, 1])

    def test_compensated_trace(self, rng):
        for _ in range(5):
            A, X = random_hermitian(rng, 4), random_hermitian(rng, 4)
            lhs = np.trace(real_embed(A) @ real_embed(X)) / 2
            assert abs(lhs - np.trace(A @ X).real) < 1e-12 * max(1.0, abs(lhs))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            real_embed(np.ones((2, 3)))


class TestProblem:
    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            SdpProblem(2, [np.array([[1, 1], [0, 1]])])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SdpProblem(2, [np.eye(3)])

    def test_needs_inequality(self):
        with pytest.raises(ValueError):
            SdpProblem(2, [], diag_value=1.0)

    def test_diag_value_positive(self):
        with pytest.raises(ValueError):
            SdpProblem(2, [np.eye(2)], diag_value=0.0)


def check_certificate(p, sol, tol=1e-6):
    assert sol.status == OPTIMAL
    X = sol.X
    assert np.allclose(X, X.conj().T)
    assert sol.min_eig >= -1e-7 * np.trace(X).real
    for A in p.inequalities:
        assert np.trace(A @ X).real >= sol.t - tol * (1 + abs(sol.t))
    for B, b in p.equalities:
        assert abs(np.trace(B @ X).real - b) <= tol * max(1.0, abs(b))
    if p.diag_value is not None:
        assert np.allclose(np.diag(X).real, p.diag_value, rtol=tol, atol=0)


class TestSolve:
    def test_scalar(self):
        sol = solve_maxmin_sdp(SdpProblem(1, [np.eye(1)], diag_value=0.3))
        assert sol.status == OPTIMAL
        assert abs(sol.t - 0.3) < 1e-12 and abs(sol.X[0, 0] - 0.3) < 1e-12

    def test_identity_objective_pins_trace(self):
        n, d = 5, 0.2
        sol = solve_maxmin_sdp(SdpProblem(n, [np.eye(n)], diag_value=d))
        assert abs(sol.t - n * d) < 1e-9

    def test_single_user_trace_problem_is_eigenproblem(self, rng):
        for _ in range(5):
            g = crandn(rng, 3)
            C = np.outer(g, g.conj())
            sol = solve_maxmin_sdp(SdpProblem(3, [C], [(np.eye(3), 0.01)]))
            lam, v = principal_eigenpair(C)
            assert abs(sol.t / (0.01 * lam) - 1) < 1e-5
            assert np.linalg.norm(sol.X - 0.01 * np.outer(v, v.conj())) < 1e-4 * 0.01

    def test_full_rank_objective(self, rng):
        C = random_psd(rng, 4)
        sol = solve_maxmin_sdp(SdpProblem(4, [C], [(np.eye(4), 2.0)]))
        assert abs(sol.t - 2.0 * np.linalg.eigvalsh(C)[-1]) < 1e-5 * sol.t

    def test_against_external_reference_diag(self):
        # reference value from an independent conic solver on the same data
        p = SdpProblem(6, rank_one_family(77, 6, 4), diag_value=1 / 6)
        sol = solve_maxmin_sdp(p)
        check_certificate(p, sol)
        assert abs(sol.t / 2.3628774 - 1) < 1e-5

    def test_against_external_reference_weighted_trace(self):
        B = np.diag(np.arange(1, 6.0))
        p = SdpProblem(5, rank_one_family(78, 5, 3), [(B, 2.0)])
        sol = solve_maxmin_sdp(p)
        check_certificate(p, sol)
        assert abs(sol.t / 1.7534118 - 1) < 1e-5

    def test_certificate_on_random_instances(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            n = 4 + seed
            A = [a * 10.0 ** rng.uniform(-3, 3) for a in rank_one_family(seed, n, 3 + seed)]
            p = SdpProblem(n, A, diag_value=1 / n)
            check_certificate(p, solve_maxmin_sdp(p))

    def test_indefinite_objective(self):
        A = [np.diag([1.0, -1.0]), np.diag([-2.0, 1.0])]
        sol = solve_maxmin_sdp(SdpProblem(2, A, [(np.eye(2), 1.0)]))
        # X = diag(x, 1 - x): max min(2x - 1, 1 - 3x) at x = 0.4
        assert sol.status == OPTIMAL and abs(sol.t + 0.2) < 1e-6

    def test_zero_equality_is_infeasible(self):
        sol = solve_maxmin_sdp(SdpProblem(2, [np.eye(2)], [(np.zeros((2, 2)), 1.0)]))
        assert sol.status == INFEASIBLE

    def test_negative_trace_is_infeasible(self):
        sol = solve_maxmin_sdp(SdpProblem(2, [np.eye(2)], [(np.eye(2), -1.0)]))
        assert sol.status == INFEASIBLE

    def test_barrier_parameter_decreases(self):
        p = SdpProblem(8, rank_one_family(3, 8, 5), diag_value=1 / 8)
        mu = np.array([h[2] for h in solve_maxmin_sdp(p).history])
        assert np.all(np.diff(mu) <= 1e-6 * mu[:-1])

    def test_gap_closes(self):
        p = SdpProblem(8, rank_one_family(4, 8, 5), diag_value=1 / 8)
        sol = solve_maxmin_sdp(p)
        pobj, dobj, _ = sol.history[-1]
        assert abs(pobj - dobj) <= 1e-5 * (1 + abs(dobj))
        assert sol.t <= dobj + 1e-6 * (1 + abs(dobj))

    def test_desk_scale_terminates(self):
        p = SdpProblem(60, rank_one_family(5, 60, 25), diag_value=1 / 60)
        sol = solve_maxmin_sdp(p, max_iters=200)
        check_certificate(p, sol)
        assert sol.iterations <= 200

    def test_iteration_cap_reported(self):
        p = SdpProblem(6, rank_one_family(6, 6, 4), diag_value=1 / 6)
        sol = solve_maxmin_sdp(p, max_iters=2)
        assert sol.status == "max-iterations" and sol.iterations == 2

    def test_deterministic(self):
        p = SdpProblem(5, rank_one_family(7, 5, 3), diag_value=0.2)
        a, b = solve_maxmin_sdp(p), solve_maxmin_sdp(p)
        assert np.array_equal(a.X, b.X)
