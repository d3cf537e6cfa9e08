"""Tests for Hurwitz checks, Lyapunov solves and the Kleinman iteration."""

from __future__ import annotations

import math

import numpy as np
import numpy.testing as nptest
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm, solve_continuous_are

from domain.errors import (
    NonFiniteMatrixError,
    NotHurwitzError,
    ShapeMismatchError,
    UnstabilizableError,
)
from domain.linalg import (
    bass_stabilizing_gain,
    is_hurwitz,
    kleinman_care,
    lyapunov_residual,
    riccati_residual,
    solve_lyapunov,
    spectral_abscissa,
)


def random_hurwitz(rng: np.random.Generator, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M - (max(0.0, spectral_abscissa(M)) + 0.5) * np.eye(n)


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


class TestHurwitz:

    def test_diagonal(self) -> None:
        assert spectral_abscissa(np.diag([-1.0, -2.0])) == pytest.approx(-1.0)
        assert is_hurwitz(np.diag([-1.0, -2.0])) == (True, pytest.approx(-1.0))

    def test_marginal_is_not_hurwitz(self) -> None:
        stable, abscissa = is_hurwitz([[0.0]])
        assert not stable
        assert abscissa == pytest.approx(0.0)

    def test_margin_excludes_near_zero(self) -> None:
        assert not is_hurwitz(np.diag([-1e-10, -1.0]))[0]

    def test_complex_pair(self) -> None:
        A = np.array([[-0.1, 5.0], [-5.0, -0.1]])
        assert spectral_abscissa(A) == pytest.approx(-0.1)

    def test_non_finite(self) -> None:
        with pytest.raises(NonFiniteMatrixError):
            is_hurwitz([[np.nan, 0.0], [0.0, -1.0]])


class TestSolveLyapunov:

    def test_scalar(self) -> None:
        assert solve_lyapunov([[-1.0]], [[1.0]]).P[0, 0] == pytest.approx(0.5)

    @pytest.mark.parametrize("side", ["transposed", "plain"])
    @pytest.mark.parametrize("n", [2, 5, 12])
    def test_residual_and_symmetry(self, rng, side: str, n: int) -> None:
        A = random_hurwitz(rng, n)
        Q = random_spd(rng, n)
        sol = solve_lyapunov(A, Q, side=side)
        nptest.assert_allclose(sol.P, sol.P.T, atol=0.0)
        res = np.linalg.norm(lyapunov_residual(A, sol.P, Q, side), "fro")
        assert res <= 1e-8 * (1.0 + np.linalg.norm(Q, "fro"))
        assert sol.residual_norm == pytest.approx(res, abs=1e-12)

    @pytest.mark.parametrize("side", ["transposed", "plain"])
    def test_schur_matches_kron_reference(self, rng, side: str) -> None:
        A = random_hurwitz(rng, 6)
        Q = random_spd(rng, 6)
        nptest.assert_allclose(solve_lyapunov(A, Q, side=side, method="schur").P,
                               solve_lyapunov(A, Q, side=side, method="kron").P,
                               rtol=1e-9, atol=1e-11)

    def test_sides_are_transposes(self, rng) -> None:
        A = random_hurwitz(rng, 4)
        Q = random_spd(rng, 4)
        nptest.assert_allclose(solve_lyapunov(A, Q, side="transposed").P,
                               solve_lyapunov(A.T, Q, side="plain").P, rtol=1e-10)

    def test_matches_integral_form(self, rng) -> None:
        # P = ∫_0^∞ e^{A^T t} Q e^{A t} dt; the tail beyond t = 80 is negligible
        A = random_hurwitz(rng, 3)
        Q = random_spd(rng, 3)
        P, _ = quad_vec(lambda t: expm(A.T * t) @ Q @ expm(A * t), 0.0, 80.0, epsrel=1e-10)
        nptest.assert_allclose(solve_lyapunov(A, Q).P, P, rtol=1e-7, atol=1e-9)

    def test_not_hurwitz_reports_abscissa(self) -> None:
        with pytest.raises(NotHurwitzError) as info:
            solve_lyapunov(np.diag([0.5, -1.0]), np.eye(2))
        assert info.value.abscissa == pytest.approx(0.5)
        assert info.value.code == "not_hurwitz"

    def test_shape_mismatch(self) -> None:
        with pytest.raises(ShapeMismatchError):
            solve_lyapunov(-np.eye(2), np.eye(3))

    def test_kron_limited_to_small_systems(self) -> None:
        with pytest.raises(ValueError, match="kron"):
            solve_lyapunov(-np.eye(65), np.eye(65), method="kron")

    def test_unknown_side(self) -> None:
        with pytest.raises(ValueError, match="side"):
            solve_lyapunov(-np.eye(2), np.eye(2), side="left")


class TestKleinman:

    def test_scalar_optimum(self) -> None:
        K, P = kleinman_care([[-1.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]])
        assert K[0, 0] == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-10)
        assert P[0, 0] == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-10)

    def test_matches_scipy_are(self, illustrative) -> None:
        A, B = illustrative.system.A_at(0.0), illustrative.system.B_at(0.0)
        Q, R = np.eye(2), np.eye(2)
        K, P = kleinman_care(A, B, Q, R, 10.0 * B.T)
        P_ref = solve_continuous_are(A, B, Q, R)
        nptest.assert_allclose(P, P_ref, rtol=1e-8)
        nptest.assert_allclose(K, np.linalg.solve(R, B.T @ P_ref), rtol=1e-8)
        assert riccati_residual(A, B, Q, R, P) <= 1e-8

    def test_zero_iterations_returns_seed(self) -> None:
        K, P = kleinman_care([[-1.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]], max_iter=0)
        assert K[0, 0] == 1.0
        assert P[0, 0] == pytest.approx(0.5)

    def test_zero_input_matrix(self) -> None:
        with pytest.raises(UnstabilizableError):
            kleinman_care([[-1.0]], [[0.0]], [[1.0]], [[1.0]], [[0.0]])

    def test_destabilizing_seed(self) -> None:
        with pytest.raises(NotHurwitzError):
            kleinman_care([[1.0]], [[1.0]], [[1.0]], [[1.0]], [[0.5]])

    def test_seed_shape(self) -> None:
        with pytest.raises(ShapeMismatchError):
            kleinman_care(-np.eye(2), np.eye(2), np.eye(2), np.eye(2), np.eye(3))


class TestGramianSeed:

    def test_stabilizes_rigid_body_chain(self, mass_spring) -> None:
        A, B = mass_spring.system.A_at(0.0), mass_spring.system.B_at(0.0)
        # velocity feedback alone cannot move the rigid-body pole at the origin
        assert not is_hurwitz(A - B @ B.T)[0]
        K = bass_stabilizing_gain(A, B)
        assert is_hurwitz(A - B @ K)[0]

    def test_uncontrollable_pair(self) -> None:
        with pytest.raises(UnstabilizableError):
            bass_stabilizing_gain(np.diag([1.0, 2.0]), np.array([[1.0], [0.0]]))
