"""Randomized checks of the matrix inequalities the surrogate analysis rests on."""

from __future__ import annotations

import numpy as np
import pytest

from domain.basis import expectation, gauss_rule
from domain.linalg import is_hurwitz, solve_lyapunov, spectral_abscissa
from domain.models import ParametricSystem, PolynomialMatrix
from domain.surrogate import build_surrogate, closed_loop, evaluate
from domain.validation import gain_norm_bound

TRIALS = 100


def random_hurwitz(rng, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M - (max(0.0, spectral_abscissa(M)) + 0.5) * np.eye(n)


def random_psd(rng, n: int, rank: int = None) -> np.ndarray:
    M = rng.standard_normal((n, rank or n))
    return M @ M.T


def random_symmetric(rng, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M + M.T


def random_polynomial_plant(rng, n_x: int, n_u: int, degree: int) -> ParametricSystem:
    A = PolynomialMatrix(0.3 * rng.standard_normal((degree + 1, n_x, n_x)))
    B = PolynomialMatrix(rng.standard_normal((degree + 1, n_x, n_u)))
    a = rng.uniform(-2.0, 0.0)
    return ParametricSystem.from_polynomials(A, B, (a, a + rng.uniform(0.5, 3.0)))


class TestLemmaSuite:

    def test_trace_pairing(self, rng) -> None:
        # Tr(P N) = Tr(M Y) for A^T P + P A + M = 0 and A Y + Y A^T + N = 0, M and N symmetric
        for _ in range(TRIALS):
            n = int(rng.integers(1, 7))
            A = random_hurwitz(rng, n)
            M, N = random_symmetric(rng, n), random_symmetric(rng, n)
            P = solve_lyapunov(A, M, side="transposed").P
            Y = solve_lyapunov(A, N, side="plain").P
            scale = 1.0 + np.linalg.norm(P) * np.linalg.norm(N) + np.linalg.norm(M) * np.linalg.norm(Y)
            assert abs(np.trace(P @ N) - np.trace(M @ Y)) <= 1e-10 * scale

    def test_lyapunov_monotonicity(self, rng) -> None:
        for _ in range(TRIALS):
            n = int(rng.integers(1, 7))
            A = random_hurwitz(rng, n)
            Q2 = random_psd(rng, n)
            Q1 = Q2 + random_psd(rng, n, rank=1)
            P1 = solve_lyapunov(A, Q1).P
            P2 = solve_lyapunov(A, Q2).P
            assert np.min(np.linalg.eigvalsh(P1 - P2)) >= -1e-9 * np.linalg.norm(P1)

    def test_trace_inequality(self, rng) -> None:
        # λmin(X) Tr(Y) <= Tr(XY) <= λmax(X) Tr(Y) for symmetric X and Y >= 0
        for _ in range(TRIALS):
            n = int(rng.integers(1, 8))
            M = rng.standard_normal((n, n))
            X = M + M.T
            Y = random_psd(rng, n)
            eig = np.linalg.eigvalsh(X)
            t = np.trace(X @ Y)
            scale = 1e-10 * (1.0 + np.abs(eig).max() * np.trace(Y))
            assert eig[0] * np.trace(Y) - scale <= t <= eig[-1] * np.trace(Y) + scale

    def test_complete_square(self, rng) -> None:
        # K^T R K - K'^T R K - K^T R K' + K'^T R K' = (K - K')^T R (K - K') >= 0
        for _ in range(TRIALS):
            n_u, n_x = int(rng.integers(1, 4)), int(rng.integers(1, 6))
            R = random_psd(rng, n_u) + np.eye(n_u)
            K, K2 = rng.standard_normal((n_u, n_x)), rng.standard_normal((n_u, n_x))
            expanded = K.T @ R @ K - K2.T @ R @ K - K.T @ R @ K2 + K2.T @ R @ K2
            D = K - K2
            np.testing.assert_allclose(expanded, D.T @ R @ D, atol=1e-10)
            assert np.min(np.linalg.eigvalsh(0.5 * (expanded + expanded.T))) >= -1e-10

    def test_cross_term_bound(self, rng) -> None:
        # X^T Y + Y^T X <= a X^T X + Y^T Y / a for every a > 0
        for _ in range(TRIALS):
            m, n = int(rng.integers(1, 5)), int(rng.integers(1, 6))
            X, Y = rng.standard_normal((m, n)), rng.standard_normal((m, n))
            a = 10.0 ** rng.uniform(-3.0, 3.0)
            gap = a * X.T @ X + Y.T @ Y / a - X.T @ Y - Y.T @ X
            scale = 1.0 + a * np.linalg.norm(X) ** 2 + np.linalg.norm(Y) ** 2 / a
            assert np.min(np.linalg.eigvalsh(0.5 * (gap + gap.T))) >= -1e-9 * scale

    def test_cauchy_schwarz_for_random_matrices(self, rng) -> None:
        for _ in range(TRIALS):
            n, m, degree = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
            X = PolynomialMatrix(rng.standard_normal((degree + 1, n, m)))
            Y = PolynomialMatrix(rng.standard_normal((degree + 1, n, m)))
            rule = gauss_rule(degree + 2, (-1.0, 1.0))
            cross = np.linalg.norm(expectation(rule, lambda xi: X(xi) @ Y(xi).T), 2)
            xx = np.linalg.norm(expectation(rule, lambda xi: X(xi) @ X(xi).T), 2)
            yy = np.linalg.norm(expectation(rule, lambda xi: Y(xi) @ Y(xi).T), 2)
            assert cross <= np.sqrt(xx) * np.sqrt(yy) + 1e-10

    def test_lifted_norm_bounded_by_parameter_sup(self, rng) -> None:
        for _ in range(TRIALS):
            sys = random_polynomial_plant(rng, int(rng.integers(1, 4)), 1, int(rng.integers(0, 4)))
            model = build_surrogate(sys, int(rng.integers(0, 5)))
            points = np.concatenate([model.rule.nodes, np.linspace(*sys.interval, 201)])
            sup = max(np.linalg.norm(sys.A_at(x), 2) for x in points)
            assert np.linalg.norm(model.A_lift, 2) <= sup * (1.0 + 1e-12) + 1e-12

    def test_min_eigenvalue_bound(self, rng, illustrative, illustrative_k0, gain_sampler) -> None:
        # λmin(P) >= λmin(I ⊗ W) / (2 ||A_cl||) for the lifted cost matrix
        Q, R = illustrative.Q, illustrative.R
        for N in (1, 3, 5):
            model = build_surrogate(illustrative.system, N)
            for K in gain_sampler(model, illustrative_k0, rng, count=TRIALS // 3 + 1, scale=0.1):
                ev = evaluate(model, K, Q, R)
                W = Q + K.T @ R @ K
                bound = np.min(np.linalg.eigvalsh(W)) / (2.0 * np.linalg.norm(closed_loop(model, K), 2))
                assert np.min(np.linalg.eigvalsh(ev.P_lift)) >= bound * (1.0 - 1e-9)

    def test_gain_norm_bound(self, rng, illustrative, illustrative_k0, gain_sampler) -> None:
        model = build_surrogate(illustrative.system, 0)
        sys, Q, R = illustrative.system, illustrative.Q, illustrative.R
        for K in gain_sampler(model, illustrative_k0, rng, count=TRIALS, scale=0.3):
            if not is_hurwitz(sys.closed_loop_at(K, sys.midpoint))[0]:
                continue
            assert np.linalg.norm(K, "fro") <= gain_norm_bound(sys, K, Q, R) * (1.0 + 1e-12)

    def test_dual_cost_identity(self, rng, illustrative, scalar_uncertain, illustrative_k0, gain_sampler) -> None:
        cases = 0
        for preset, centre in ((illustrative, illustrative_k0), (scalar_uncertain, np.array([[1.0]]))):
            for N in range(1, 9):
                model = build_surrogate(preset.system, N)
                assert model.lifted_dim <= 64
                for K in gain_sampler(model, centre, rng, count=3, scale=0.1):
                    ev = evaluate(model, K, preset.Q, preset.R)
                    assert ev.dual_cost == pytest.approx(ev.cost, rel=1e-8)
                    cases += 1
        assert cases >= 48
