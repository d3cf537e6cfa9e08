# domain/surrogate.py
from __future__ import annotations

import logging
import warnings
from typing import Optional

import numpy as np

from config import QUADRATURE_SELF_CHECK_RTOL
from domain.basis import default_rule_order, gauss_rule, make_basis, project_outer_kron
from domain.errors import InadmissibleGainError, QuadratureAccuracyWarning, ShapeMismatchError
from domain.linalg import is_hurwitz, solve_lyapunov
from domain.models import CostEvaluation, ParametricSystem, QuadratureRule, SurrogateModel

logger = logging.getLogger(__name__)


# ---------------------------------------------------------
# BLOCKWISE KRONECKER PRODUCTS
# ---------------------------------------------------------
def kron_eye_left(M: np.ndarray, X: np.ndarray, blocks: int) -> np.ndarray:
    """(I_blocks ⊗ M) X without forming the Kronecker factor. M: (p, q), X: (blocks·q, s)."""
    p, q = M.shape
    s = X.shape[1]
    return np.einsum("pq,jqs->jps", M, X.reshape(blocks, q, s)).reshape(blocks * p, s)


def kron_eye_right(X: np.ndarray, M: np.ndarray, blocks: int) -> np.ndarray:
    """X (I_blocks ⊗ M) without forming the Kronecker factor. X: (s, blocks·p), M: (p, q)."""
    p, q = M.shape
    s = X.shape[0]
    return np.einsum("sjp,pq->sjq", X.reshape(s, blocks, p), M).reshape(s, blocks * q)


def block_diag_sum(X: np.ndarray, blocks: int, rows: int, cols: int) -> np.ndarray:
    """Σ_i [X]_{i,i} for a (blocks·rows, blocks·cols) matrix."""
    return np.einsum("iaib->ab", X.reshape(blocks, rows, blocks, cols))


# ---------------------------------------------------------
# SURROGATE CONSTRUCTION
# ---------------------------------------------------------
def build_surrogate(sys: ParametricSystem, order: int,
                    rule: Optional[QuadratureRule] = None) -> SurrogateModel:
    """
    Galerkin-lift a parametric plant to the deterministic surrogate of order N.

    A_lift = E[φφ^T ⊗ A(ξ)], B_lift = E[φφ^T ⊗ B(ξ)], selector = [I; 0; ...; 0].

    When no rule is given the node count follows `default_rule_order`. For a
    plant without a declared polynomial degree the projection is repeated with
    twice the nodes; the finer result is kept and a QuadratureAccuracyWarning
    is raised if the two differ by more than QUADRATURE_SELF_CHECK_RTOL.
    """
    basis = make_basis(order, sys.interval)
    self_check = rule is None and sys.declared_degree is None
    if rule is None:
        rule = gauss_rule(default_rule_order(order, sys.declared_degree), sys.interval)

    A_lift = project_outer_kron(basis, rule, sys.A_at)
    B_lift = project_outer_kron(basis, rule, sys.B_at)

    if self_check:
        fine = gauss_rule(2 * rule.size, sys.interval)
        A_fine = project_outer_kron(basis, fine, sys.A_at)
        B_fine = project_outer_kron(basis, fine, sys.B_at)
        change = max(
            np.linalg.norm(A_fine - A_lift) / max(np.linalg.norm(A_fine), 1e-300),
            np.linalg.norm(B_fine - B_lift) / max(np.linalg.norm(B_fine), 1e-300),
        )
        if change > QUADRATURE_SELF_CHECK_RTOL:
            msg = (f"Galerkin moments moved by {change:.2e} when doubling the rule "
                   f"from {rule.size} to {fine.size} nodes")
            warnings.warn(msg, QuadratureAccuracyWarning, stacklevel=2)
            logger.warning(msg)
        A_lift, B_lift, rule = A_fine, B_fine, fine

    n = basis.size
    selector = np.zeros((n * sys.n_x, sys.n_x))
    selector[: sys.n_x, :] = np.eye(sys.n_x)

    logger.debug("built surrogate for %s: N=%d, %d nodes, lifted dim %d",
                 sys.name, order, rule.size, n * sys.n_x)
    return SurrogateModel(A_lift=A_lift, B_lift=B_lift, selector=selector, order=order,
                          n_x=sys.n_x, n_u=sys.n_u, basis=basis, rule=rule)


def lift_initial_state(model: SurrogateModel, x0) -> np.ndarray:
    """ẑ_N(0) = ℐ_N x0."""
    return model.selector @ np.asarray(x0, dtype=float)


def _check_gain(model: SurrogateModel, K) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (model.n_u, model.n_x):
        raise ShapeMismatchError(f"gain must have shape {(model.n_u, model.n_x)}, got {K.shape}")
    return K


def closed_loop(model: SurrogateModel, K) -> np.ndarray:
    """𝒜_{N,c}(K) = A_lift - B_lift (I ⊗ K), computed blockwise."""
    K = _check_gain(model, K)
    return model.A_lift - kron_eye_right(model.B_lift, K, model.blocks)


def admissible(model: SurrogateModel, K) -> bool:
    stable, _ = is_hurwitz(closed_loop(model, K))
    return stable


# ---------------------------------------------------------
# COST, GRADIENT, HESSIAN ACTION
# ---------------------------------------------------------
def _admissible_closed_loop(model: SurrogateModel, K: np.ndarray):
    A_cl = closed_loop(model, K)
    stable, abscissa = is_hurwitz(A_cl)
    if not stable:
        raise InadmissibleGainError("gain is outside the surrogate admissible set", abscissa)
    return A_cl, abscissa


def evaluate(model: SurrogateModel, K, Q, R) -> CostEvaluation:
    """
    Surrogate cost Ĵ_N(K), its Lyapunov solutions and its gradient.

    P_lift solves  A_cl^T P + P A_cl + I ⊗ (Q + K^T R K) = 0,
    Y_lift solves  A_cl Y + Y A_cl^T + ℐℐ^T = 0,
    cost     = Tr(P_lift ℐℐ^T) (the leading n_x × n_x block's trace),
    gradient = 2 [ R K Σ_i Y_ii - Σ_{i,j} H_ij Y_ji ],  H = B_lift^T P_lift.

    Raises
    ------
    InadmissibleGainError
        If the lifted closed loop is not Hurwitz (carries the abscissa).
    """
    K = _check_gain(model, K)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    A_cl, abscissa = _admissible_closed_loop(model, K)
    n, nx, nu = model.blocks, model.n_x, model.n_u

    W = Q + K.T @ R @ K
    P = solve_lyapunov(A_cl, np.kron(np.eye(n), W), side="transposed", check_hurwitz=False).P
    Y = solve_lyapunov(A_cl, model.selector @ model.selector.T, side="plain",
                       check_hurwitz=False).P

    cost = float(np.trace(P[:nx, :nx]))
    Y_diag = block_diag_sum(Y, n, nx, nx)
    dual_cost = float(np.sum(W * Y_diag))

    H = model.B_lift.T @ P                                  # ((N+1) n_u, (N+1) n_x)
    cross = np.einsum("iajb,jbic->ac",
                      H.reshape(n, nu, n, nx), Y.reshape(n, nx, n, nx))
    gradient = 2.0 * (R @ K @ Y_diag - cross)

    return CostEvaluation(cost=cost, dual_cost=dual_cost, P_lift=P, Y_lift=Y,
                          gradient=gradient, hurwitz_margin=abscissa)


def surrogate_cost(model: SurrogateModel, K, Q, R) -> float:
    """Ĵ_N(K) alone (one Lyapunov solve)."""
    K = _check_gain(model, K)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    A_cl, _ = _admissible_closed_loop(model, K)
    W = Q + K.T @ R @ K
    P = solve_lyapunov(A_cl, np.kron(np.eye(model.blocks), W), check_hurwitz=False).P
    return float(np.trace(P[: model.n_x, : model.n_x]))


def hessian_action(model: SurrogateModel, K, Q, R, E,
                   evaluation: Optional[CostEvaluation] = None) -> float:
    """
    Second directional derivative ∇²Ĵ_N(K)[E, E].

    P' solves A_cl^T P' + P' A_cl + (I ⊗ E^T) ℰ + ℰ^T (I ⊗ E) = 0 with
    ℰ = I ⊗ RK - B_lift^T P_lift, and the result is
        2 <I ⊗ E, (I ⊗ RE) Y> - 4 <I ⊗ E, B_lift^T P' Y>.

    A precomputed `evaluation` at the same K can be passed to skip two solves.
    """
    K = _check_gain(model, K)
    E = _check_gain(model, E)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if evaluation is None:
        evaluation = evaluate(model, K, Q, R)
    A_cl = closed_loop(model, K)
    n, nx, nu = model.blocks, model.n_x, model.n_u

    P, Y = evaluation.P_lift, evaluation.Y_lift
    calE = np.kron(np.eye(n), R @ K) - model.B_lift.T @ P          # ((N+1) n_u, (N+1) n_x)
    F = kron_eye_left(E.T, calE, n)
    P_prime = solve_lyapunov(A_cl, F + F.T, side="transposed", check_hurwitz=False).P

    Y_diag = block_diag_sum(Y, n, nx, nx)
    first = 2.0 * np.sum(E * (R @ E @ Y_diag))
    second = 4.0 * np.sum(E * block_diag_sum(model.B_lift.T @ P_prime @ Y, n, nu, nx))
    return float(first - second)
