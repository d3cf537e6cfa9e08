"""Tests for the orthonormal Legendre basis, Gauss rules and Galerkin projection."""

from __future__ import annotations

import math

import numpy as np
import numpy.testing as nptest
import pytest
from scipy.special import eval_legendre

from domain.basis import (
    default_rule_order,
    eval_basis,
    eval_basis_many,
    expectation,
    gauss_rule,
    make_basis,
    project_outer_kron,
    reconstruct,
)
from domain.errors import (
    InvalidIntervalError,
    OutsideSupportWarning,
    ParameterDimensionError,
    QuadratureError,
    ShapeMismatchError,
)


class TestEvalBasis:

    def test_degree_two_at_half(self) -> None:
        basis = make_basis(2, (-1.0, 1.0))
        nptest.assert_allclose(eval_basis(basis, 0.5),
                               [1.0, math.sqrt(3.0) * 0.5, -math.sqrt(5.0) / 8.0], atol=1e-15)

    def test_shifted_interval_uses_affine_map(self) -> None:
        # ξ = 1.5 on (0, 2) is t = 0.5 on (-1, 1)
        shifted = eval_basis(make_basis(4, (0.0, 2.0)), 1.5)
        canonical = eval_basis(make_basis(4, (-1.0, 1.0)), 0.5)
        nptest.assert_allclose(shifted, canonical, atol=1e-14)

    def test_single_polynomial(self) -> None:
        nptest.assert_allclose(eval_basis(make_basis(0, (-3.0, 7.0)), 1.0), [1.0])

    @pytest.mark.parametrize("order", [1, 3, 5, 10, 20])
    def test_matches_scipy_legendre(self, order: int) -> None:
        basis = make_basis(order, (-1.0, 1.0))
        pts = np.linspace(-1.0, 1.0, 17)
        expected = np.stack([eval_legendre(k, pts) * math.sqrt(2 * k + 1)
                             for k in range(order + 1)], axis=1)
        nptest.assert_allclose(eval_basis_many(basis, pts), expected, atol=1e-11)

    @pytest.mark.parametrize("order", [0, 3, 8])
    def test_orthonormal_under_uniform_measure(self, order: int) -> None:
        basis = make_basis(order, (-2.0, 5.0))
        rule = gauss_rule(order + 2, basis.interval)
        phi = eval_basis_many(basis, rule.nodes)
        gram = phi.T @ (rule.weights[:, None] * phi)
        nptest.assert_allclose(gram, np.eye(order + 1), atol=1e-12)

    def test_outside_support_warns(self) -> None:
        basis = make_basis(2, (-1.0, 1.0))
        with pytest.warns(OutsideSupportWarning):
            values = eval_basis(basis, 1.5)
        assert np.all(np.isfinite(values))


class TestBasisErrors:

    @pytest.mark.parametrize("interval", [(1.0, 1.0), (2.0, -1.0), (0.0, math.inf)])
    def test_degenerate_interval(self, interval) -> None:
        with pytest.raises(InvalidIntervalError):
            make_basis(2, interval)

    def test_vector_parameter_rejected(self) -> None:
        with pytest.raises(ParameterDimensionError, match="scalar parameter"):
            make_basis(2, ((-1.0, 1.0), (0.0, 1.0)))

    def test_negative_order(self) -> None:
        with pytest.raises(ValueError, match="nonnegative"):
            make_basis(-1, (-1.0, 1.0))


class TestGaussRule:

    def test_weights_are_a_probability(self) -> None:
        rule = gauss_rule(7, (0.0, 3.0))
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.all((rule.nodes > 0.0) & (rule.nodes < 3.0))

    def test_exact_up_to_degree_2m_minus_1(self) -> None:
        rule = gauss_rule(3, (0.0, 1.0))
        # E[ξ^5] = 1/6 for ξ ~ U(0, 1)
        assert rule.weights @ rule.nodes ** 5 == pytest.approx(1.0 / 6.0, rel=1e-14)

    def test_rule_is_read_only(self) -> None:
        rule = gauss_rule(4, (-1.0, 1.0))
        with pytest.raises(ValueError):
            rule.nodes[0] = 0.0

    def test_zero_nodes(self) -> None:
        with pytest.raises(QuadratureError):
            gauss_rule(0, (-1.0, 1.0))

    @pytest.mark.parametrize("order, degree, expected", [(5, 3, 9), (5, 0, 7), (2, 4, 6), (5, None, 26)])
    def test_default_rule_order(self, order, degree, expected) -> None:
        assert default_rule_order(order, degree) == expected


class TestProjection:

    def test_constant_matrix_lifts_to_block_diagonal(self) -> None:
        basis = make_basis(3, (-1.0, 1.0))
        rule = gauss_rule(default_rule_order(3, 0), basis.interval)
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        nptest.assert_allclose(project_outer_kron(basis, rule, lambda xi: M),
                               np.kron(np.eye(4), M), atol=1e-14)

    def test_linear_parameter_couples_neighbours(self) -> None:
        basis = make_basis(1, (-1.0, 1.0))
        rule = gauss_rule(default_rule_order(1, 1), basis.interval)
        lifted = project_outer_kron(basis, rule, lambda xi: np.array([[xi]]))
        c = 1.0 / math.sqrt(3.0)
        nptest.assert_allclose(lifted, [[0.0, c], [c, 0.0]], atol=1e-15)

    def test_inconsistent_shapes(self) -> None:
        basis = make_basis(2, (-1.0, 1.0))
        rule = gauss_rule(4, basis.interval)
        with pytest.raises(ShapeMismatchError):
            project_outer_kron(basis, rule, lambda xi: np.eye(2) if xi > 0 else np.eye(3))

    def test_rule_on_other_interval(self) -> None:
        basis = make_basis(2, (-1.0, 1.0))
        rule = gauss_rule(4, (0.0, 1.0))
        with pytest.raises(InvalidIntervalError):
            project_outer_kron(basis, rule, lambda xi: np.eye(1))

    def test_projection_is_deterministic(self) -> None:
        basis = make_basis(4, (-1.0, 1.0))
        rule = gauss_rule(9, basis.interval)
        f = lambda xi: np.array([[np.cos(xi), xi ** 3], [1.0, np.exp(xi)]])  # noqa: E731
        first = project_outer_kron(basis, rule, f)
        second = project_outer_kron(basis, rule, f)
        assert np.array_equal(first, second)


class TestExpectationAndReconstruct:

    def test_expectation_of_square(self) -> None:
        rule = gauss_rule(4, (-1.0, 1.0))
        assert expectation(rule, lambda xi: xi ** 2) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_reconstruct_linear_state(self) -> None:
        basis = make_basis(1, (-1.0, 1.0))
        # x(ξ) = ξ = φ_1(ξ) / sqrt(3)
        coeffs = [0.0, 1.0 / math.sqrt(3.0)]
        nptest.assert_allclose(reconstruct(basis, coeffs, 0.5), [0.5], atol=1e-15)

    def test_reconstruct_rejects_ragged_coefficients(self) -> None:
        with pytest.raises(ShapeMismatchError):
            reconstruct(make_basis(2, (-1.0, 1.0)), np.ones(4), 0.0)
