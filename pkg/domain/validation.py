# domain/validation.py
from __future__ import annotations

import logging
import math
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    CURVATURE_DIRECTIONS,
    DEFAULT_SEED,
    FD_STEP,
    GRADIENT_REL_FLOOR,
    HESSIAN_FD_STEP,
    TRUE_COST_GRID_ORDER,
    TRUE_COST_SELF_CHECK_RTOL,
    VALIDATION_GRID_POINTS,
    X0_STATE_COUNT,
)
from domain.basis import gauss_rule
from domain.errors import InadmissibleGainError, QuadratureAccuracyWarning
from domain.linalg import is_hurwitz, solve_lyapunov
from domain.models import ConvergenceStudy, GradientCheck, ParametricSystem, SurrogateModel
from domain.surrogate import build_surrogate, evaluate, hessian_action, surrogate_cost

logger = logging.getLogger(__name__)


def _as_matrix(M) -> np.ndarray:
    return np.atleast_2d(np.asarray(M, dtype=float))


# ---------------------------------------------------------
# PER-PARAMETER ORACLES
# ---------------------------------------------------------
def cost_at_xi(sys: ParametricSystem, K, Q, R, xi: float) -> Tuple[float, np.ndarray]:
    """
    Exact LQR cost of the frozen plant at one parameter value.

    Returns (Tr P, P) where P solves
        (A(ξ) - B(ξ)K)^T P + P (A(ξ) - B(ξ)K) + Q + K^T R K = 0.

    Raises
    ------
    InadmissibleGainError
        If the closed loop is not Hurwitz at ξ.
    """
    K, Q, R = _as_matrix(K), _as_matrix(Q), _as_matrix(R)
    A_cl = sys.closed_loop_at(K, xi)
    stable, abscissa = is_hurwitz(A_cl)
    if not stable:
        raise InadmissibleGainError(f"closed loop is not Hurwitz at ξ={xi:.6g}", abscissa)
    P = solve_lyapunov(A_cl, Q + K.T @ R @ K, check_hurwitz=False).P
    return float(np.trace(P)), P


def x0_costs(P: np.ndarray, states) -> List[float]:
    """x0^T P x0 for each row x0 of `states`."""
    X = np.atleast_2d(np.asarray(states, dtype=float))
    return [float(v) for v in np.einsum("si,ij,sj->s", X, P, X)]


def seeded_initial_states(n_x: int, count: int = X0_STATE_COUNT,
                          seed: int = DEFAULT_SEED) -> np.ndarray:
    """Reproducible standard-normal initial states, shape (count, n_x)."""
    return np.random.default_rng(seed).standard_normal((count, n_x))


def _quadrature_cost(sys: ParametricSystem, K, Q, R, nodes: int) -> float:
    rule = gauss_rule(nodes, sys.interval)
    values = np.array([cost_at_xi(sys, K, Q, R, x)[0] for x in rule.nodes])
    return float(rule.weights @ values)


def true_cost(sys: ParametricSystem, K, Q, R,
              grid_order: int = TRUE_COST_GRID_ORDER) -> float:
    """
    𝒥(K) = E[Tr P(K, ξ)] by Gauss–Legendre quadrature with `grid_order` nodes.

    The estimate is repeated with twice the nodes and the finer value is
    returned; a relative change above TRUE_COST_SELF_CHECK_RTOL raises a
    QuadratureAccuracyWarning.
    """
    coarse = _quadrature_cost(sys, K, Q, R, grid_order)
    fine = _quadrature_cost(sys, K, Q, R, 2 * grid_order)
    change = abs(fine - coarse) / max(abs(fine), 1e-300)
    if change > TRUE_COST_SELF_CHECK_RTOL:
        msg = (f"true cost moved by {change:.2e} (relative) when doubling the grid "
               f"from {grid_order} to {2 * grid_order} nodes")
        warnings.warn(msg, QuadratureAccuracyWarning, stacklevel=2)
        logger.warning(msg)
    return fine


def monte_carlo_cost(sys: ParametricSystem, K, Q, R, samples: int = 1000,
                     seed: int = DEFAULT_SEED) -> Tuple[float, float]:
    """Sample-mean cross-check of 𝒥(K); returns (mean, standard error)."""
    if samples < 2:
        raise ValueError("monte carlo needs at least two samples")
    a, b = sys.interval
    xis = np.random.default_rng(seed).uniform(a, b, samples)
    values = np.array([cost_at_xi(sys, K, Q, R, x)[0] for x in xis])
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


def uniform_grid(interval, points: int = VALIDATION_GRID_POINTS) -> np.ndarray:
    a, b = interval
    return np.linspace(a, b, points)


def admissibility_sweep(sys: ParametricSystem, K, grid) -> Tuple[np.ndarray, bool]:
    """Spectral abscissa of A(ξ) - B(ξ)K at each grid node and whether all are Hurwitz."""
    K = _as_matrix(K)
    checks = [is_hurwitz(sys.closed_loop_at(K, x)) for x in grid]
    abscissas = np.array([abscissa for _, abscissa in checks])
    return abscissas, all(stable for stable, _ in checks)


def cost_profile(sys: ParametricSystem, K, Q, R, grid,
                 states) -> Tuple[List[Dict[str, object]], bool]:
    """
    Per-node rows for cost-versus-parameter plots.

    Each row holds xi, abscissa, tr_cost and x0_costs. Nodes where the loop
    is unstable keep their abscissa and carry NaN costs; the boolean is False
    when any node is unstable.
    """
    K = _as_matrix(K)
    rows, all_ok = [], True
    n_states = np.atleast_2d(states).shape[0]
    for x in grid:
        try:
            tr, P = cost_at_xi(sys, K, Q, R, float(x))
            abscissa = is_hurwitz(sys.closed_loop_at(K, x))[1]
            rows.append({"xi": float(x), "abscissa": abscissa, "tr_cost": tr,
                         "x0_costs": x0_costs(P, states)})
        except InadmissibleGainError as exc:
            all_ok = False
            rows.append({"xi": float(x), "abscissa": exc.abscissa, "tr_cost": math.nan,
                         "x0_costs": [math.nan] * n_states})
    return rows, all_ok


# ---------------------------------------------------------
# SURROGATE VERSUS REFERENCE
# ---------------------------------------------------------
def convergence_study(sys: ParametricSystem, K, Q, R, orders: Sequence[int],
                      grid_order: int = TRUE_COST_GRID_ORDER) -> ConvergenceStudy:
    """
    Ĵ_N(K) for each order against the quadrature reference 𝒥(K).

    Orders where K does not stabilize the surrogate are kept with NaN and
    listed in `failures`; the study goes on with the next order.
    """
    reference = true_cost(sys, K, Q, R, grid_order)
    costs, errors, failures = [], [], {}
    for N in orders:
        model = build_surrogate(sys, int(N))
        try:
            value = surrogate_cost(model, K, Q, R)
        except InadmissibleGainError as exc:
            failures[int(N)] = f"inadmissible (abscissa {exc.abscissa:.6g})"
            logger.warning("order %d: gain is inadmissible for the surrogate", N)
            costs.append(math.nan)
            errors.append(math.nan)
            continue
        costs.append(value)
        errors.append(abs(reference - value))
        logger.debug("order %d: surrogate %.12g, error %.3e", N, value, errors[-1])
    return ConvergenceStudy(orders=[int(N) for N in orders], surrogate_costs=costs,
                            reference_cost=reference, abs_errors=errors, failures=failures)


def _central_difference(model: SurrogateModel, K: np.ndarray, Q, R, E: np.ndarray,
                        h: float, stencil: int) -> float:
    if stencil == 2:
        return (surrogate_cost(model, K + E, Q, R) - surrogate_cost(model, K - E, Q, R)) / (2.0 * h)
    return (-surrogate_cost(model, K + 2.0 * E, Q, R) + 8.0 * surrogate_cost(model, K + E, Q, R)
            - 8.0 * surrogate_cost(model, K - E, Q, R)
            + surrogate_cost(model, K - 2.0 * E, Q, R)) / (12.0 * h)


def gradient_check(model: SurrogateModel, K, Q, R, h: float = FD_STEP,
                   stencil: int = 2) -> GradientCheck:
    """
    Central differences of the surrogate cost against the analytic gradient.

    `stencil` is 2 (error O(h²)) or 4 (error O(h⁴), which tolerates a larger h
    and so less cancellation on costly plants). The error per entry is
    |fd - g| / max(|g|, GRADIENT_REL_FLOOR · (1 + ||g||_F)). Entries whose
    perturbed gains leave the admissible set are skipped and listed.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    if stencil not in (2, 4):
        raise ValueError("stencil must be 2 or 4")
    K = _as_matrix(K)
    analytic = evaluate(model, K, Q, R).gradient
    fd = np.full_like(K, np.nan)
    skipped = []
    for idx in np.ndindex(K.shape):
        E = np.zeros_like(K)
        E[idx] = h
        try:
            fd[idx] = _central_difference(model, K, Q, R, E, h, stencil)
        except InadmissibleGainError:
            skipped.append(tuple(int(i) for i in idx))
    mask = ~np.isnan(fd)
    floor = GRADIENT_REL_FLOOR * (1.0 + np.linalg.norm(analytic, "fro"))
    rel = np.abs(fd - analytic)[mask] / np.maximum(np.abs(analytic[mask]), floor)
    worst = float(rel.max()) if rel.size else math.nan
    return GradientCheck(max_rel_error=worst, fd_gradient=fd,
                         analytic_gradient=analytic, skipped=skipped)


def hessian_check(model: SurrogateModel, K, Q, R, E,
                  h: float = HESSIAN_FD_STEP) -> Tuple[float, float, float]:
    """Returns (relative error, analytic, second difference) for ∇²Ĵ_N(K)[E, E]."""
    K, E = _as_matrix(K), _as_matrix(E)
    analytic = hessian_action(model, K, Q, R, E)
    centre = surrogate_cost(model, K, Q, R)
    fd = (surrogate_cost(model, K + h * E, Q, R) - 2.0 * centre
          + surrogate_cost(model, K - h * E, Q, R)) / h ** 2
    return abs(fd - analytic) / max(abs(analytic), 1.0), analytic, fd


def curvature_check(model: SurrogateModel, K, Q, R,
                    directions: int = CURVATURE_DIRECTIONS,
                    seed: Optional[int] = DEFAULT_SEED) -> float:
    """Smallest ∇²Ĵ_N(K)[E, E] over random unit-Frobenius directions E."""
    K = _as_matrix(K)
    rng = np.random.default_rng(seed)
    evaluation = evaluate(model, K, Q, R)
    values = []
    for _ in range(directions):
        E = rng.standard_normal(K.shape)
        E /= np.linalg.norm(E, "fro")
        values.append(hessian_action(model, K, Q, R, E, evaluation=evaluation))
    return float(min(values))


def gain_norm_bound(sys: ParametricSystem, K, Q, R, xi: Optional[float] = None) -> float:
    """
    a1 J + a2 sqrt(J) with J = Tr P(K, ξ), a1 = 2||B(ξ)|| / λmin(R),
    a2 = sqrt(2||A(ξ)|| / λmin(R)); an upper bound on ||K||_F for admissible K.
    ξ defaults to the interval midpoint.
    """
    xi = sys.midpoint if xi is None else float(xi)
    J, _ = cost_at_xi(sys, K, Q, R, xi)
    r_min = float(np.min(np.linalg.eigvalsh(_as_matrix(R))))
    a1 = 2.0 * np.linalg.norm(sys.B_at(xi), 2) / r_min
    a2 = math.sqrt(2.0 * np.linalg.norm(sys.A_at(xi), 2) / r_min)
    return float(a1 * J + a2 * math.sqrt(J))
