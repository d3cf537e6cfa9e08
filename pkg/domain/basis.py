# domain/basis.py
from __future__ import annotations

import logging
import math
import warnings
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from config import NONPOLY_QUADRATURE_BASE, QUADRATURE_EXTRA_NODES
from domain.errors import (
    InvalidIntervalError,
    OutsideSupportWarning,
    ParameterDimensionError,
    QuadratureError,
    ShapeMismatchError,
)
from domain.models import LegendreBasis, QuadratureRule

logger = logging.getLogger(__name__)


def _check_interval(interval) -> Tuple[float, float]:
    """
    Validate a scalar-parameter support (a, b).

    Nested pairs such as [(a1, b1), (a2, b2)] describe a vector parameter and
    are rejected with ParameterDimensionError.
    """
    try:
        a, b = interval
    except (TypeError, ValueError):
        raise InvalidIntervalError(f"interval must be a pair (a, b), got {interval!r}")
    if np.ndim(a) != 0 or np.ndim(b) != 0:
        raise ParameterDimensionError(
            "only a scalar parameter is supported; got a vector-valued interval")
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise InvalidIntervalError(f"interval must satisfy a < b with finite ends, got ({a}, {b})")
    return a, b


def to_canonical(interval: Tuple[float, float], xi):
    """Affine map of ξ in (a, b) onto t in (-1, 1)."""
    a, b = interval
    return (2.0 * np.asarray(xi, dtype=float) - a - b) / (b - a)


def make_basis(order: int, interval) -> LegendreBasis:
    """
    Build the orthonormal Legendre basis of degree `order` on `interval`.

    Raises
    ------
    InvalidIntervalError
        If a >= b or an end is not finite.
    ParameterDimensionError
        If the interval describes a vector parameter.
    ValueError
        If order is negative.
    """
    if int(order) != order or order < 0:
        raise ValueError(f"order must be a nonnegative integer, got {order!r}")
    return LegendreBasis(order=int(order), interval=_check_interval(interval))


def eval_basis_many(basis: LegendreBasis, xis) -> np.ndarray:
    """
    Evaluate φ_N at many parameters; returns shape (m, N + 1).

    Uses the orthonormal three-term recurrence
        β_{k+1} φ_{k+1}(t) = t φ_k(t) - β_k φ_{k-1}(t),  β_k = k / sqrt(4k² - 1),
    which never forms monomial coefficients and stays stable for large N.
    """
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    if xis.ndim != 1:
        raise ParameterDimensionError("parameters must be scalars")
    a, b = basis.interval
    if np.any((xis < a) | (xis > b)):
        logger.debug("%d of %d parameters outside (%g, %g)",
                     int(np.count_nonzero((xis < a) | (xis > b))), xis.shape[0], a, b)
        warnings.warn(f"basis evaluated outside its support ({a}, {b})", OutsideSupportWarning,
                      stacklevel=2)
    t = to_canonical(basis.interval, xis)

    phi = np.zeros((xis.shape[0], basis.size))
    phi[:, 0] = 1.0
    if basis.order >= 1:
        phi[:, 1] = math.sqrt(3.0) * t
    beta_prev = 1.0 / math.sqrt(3.0)
    for k in range(1, basis.order):
        beta_next = (k + 1) / math.sqrt(4.0 * (k + 1) ** 2 - 1.0)
        phi[:, k + 1] = (t * phi[:, k] - beta_prev * phi[:, k - 1]) / beta_next
        beta_prev = beta_next
    return phi


def eval_basis(basis: LegendreBasis, xi: float) -> np.ndarray:
    """φ_N(ξ) = [φ_0(ξ), ..., φ_N(ξ)]; evaluation outside the support warns."""
    if np.ndim(xi) != 0:
        raise ParameterDimensionError("eval_basis takes a scalar parameter")
    return eval_basis_many(basis, [xi])[0]


def gauss_rule(m: int, interval) -> QuadratureRule:
    """
    m-node Gauss–Legendre rule on `interval` with weights summing to one.

    Nodes come from numpy's `leggauss` on [-1, 1] and are mapped affinely;
    the weights are halved so the rule integrates against Uniform(a, b).
    """
    if int(m) != m or m < 1:
        raise QuadratureError(f"quadrature needs at least one node, got m={m!r}")
    a, b = _check_interval(interval)
    t, w = leggauss(int(m))
    nodes = 0.5 * ((b - a) * t + a + b)
    return QuadratureRule(nodes=nodes, weights=0.5 * w, interval=(a, b))


def default_rule_order(order: int, declared_degree: Optional[int]) -> int:
    """
    Number of nodes that makes the Galerkin moments exact.

    With polynomial entries of degree d the integrand φ_i φ_j M has degree
    2N + d, so m = N + ceil(d/2) + 2 nodes (2m - 1 >= 2N + d) suffice.
    Without a declared degree we fall back to 2N + 16 and rely on the
    doubling self-check in the surrogate builder.
    """
    if declared_degree is None:
        return 2 * order + NONPOLY_QUADRATURE_BASE
    return order + math.ceil(declared_degree / 2) + QUADRATURE_EXTRA_NODES


def sample_matrix_function(rule: QuadratureRule, M: Callable[[float], np.ndarray]) -> np.ndarray:
    """Stack M(ξ_q) over the rule's nodes; shape (m, r, c). All outputs must agree in shape."""
    values = [np.atleast_2d(np.asarray(M(float(x)), dtype=float)) for x in rule.nodes]
    shape = values[0].shape
    for x, v in zip(rule.nodes, values):
        if v.shape != shape:
            raise ShapeMismatchError(
                f"matrix function returned shape {v.shape} at ξ={x:.6g}, expected {shape}")
    return np.stack(values)


def project_outer_kron(basis: LegendreBasis, rule: QuadratureRule,
                       M: Callable[[float], np.ndarray]) -> np.ndarray:
    """
    Galerkin projection Σ_q w_q (φ(ξ_q) φ(ξ_q)^T ⊗ M(ξ_q)).

    Block (i, j) of the result, of size r × c, is E[φ_i φ_j M(ξ)] up to
    quadrature error. The sum runs over nodes in a fixed order through a
    single einsum, so the result is reproducible bit for bit.
    """
    if not np.allclose(rule.interval, basis.interval, rtol=1e-12, atol=0.0):
        raise InvalidIntervalError(
            f"rule interval {rule.interval} does not match basis interval {basis.interval}")
    values = sample_matrix_function(rule, M)            # (m, r, c)
    phi = eval_basis_many(basis, rule.nodes)            # (m, N+1)
    blocks = np.einsum("q,qi,qj,qrc->irjc", rule.weights, phi, phi, values)
    n = basis.size
    r, c = values.shape[1:]
    return blocks.reshape(n * r, n * c)


def expectation(rule: QuadratureRule, f: Callable[[float], np.ndarray]) -> np.ndarray:
    """E[f(ξ)] under Uniform(a, b) by the rule."""
    values = np.stack([np.asarray(f(float(x)), dtype=float) for x in rule.nodes])
    return np.tensordot(rule.weights, values, axes=1)


def reconstruct(basis: LegendreBasis, coefficients, xi: float) -> np.ndarray:
    """
    x̂(ξ) = (φ_N(ξ) ⊗ I)^T ẑ from stacked expansion coefficients.

    `coefficients` has length (N + 1) · n; block k holds the coefficient of φ_k.
    """
    z = np.asarray(coefficients, dtype=float)
    n = z.shape[0] // basis.size
    if n * basis.size != z.shape[0]:
        raise ShapeMismatchError(
            f"coefficient length {z.shape[0]} is not a multiple of {basis.size}")
    return eval_basis(basis, xi) @ z.reshape(basis.size, n)
