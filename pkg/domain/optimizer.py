# domain/optimizer.py
from __future__ import annotations

import logging
import time
from typing import Optional, Tuple

import numpy as np
from scipy.stats import linregress

from config import (
    COST_ROUNDING_RTOL,
    DEFAULT_PCE_ORDER,
    LOG_EVERY,
    MAX_BACKTRACKS,
    SEED_GAIN_SCALES,
)
from domain.errors import InadmissibleGainError, PceLqrError, UnstabilizableError
from domain.linalg import bass_stabilizing_gain, is_hurwitz, kleinman_care
from domain.models import (
    CostEvaluation,
    IterateRecord,
    OptimizationReport,
    OptimizerConfig,
    ParametricSystem,
    QuadratureRule,
    SurrogateModel,
)
from domain.surrogate import build_surrogate, closed_loop, evaluate

logger = logging.getLogger(__name__)


# ---------------------------------------------------------
# INITIAL GAIN
# ---------------------------------------------------------
def _seed_gain(A: np.ndarray, B: np.ndarray, fallback_gain=None) -> Tuple[np.ndarray, str]:
    """Stabilizing gain for the nominal pair: c·B^T sweep, then the user gain, then the Gramian seed."""
    for c in SEED_GAIN_SCALES:
        K = c * B.T
        if is_hurwitz(A - B @ K)[0]:
            return K, f"scaled_transpose(c={c:g})"
    if fallback_gain is not None:
        K = np.atleast_2d(np.asarray(fallback_gain, dtype=float))
        if K.shape == B.T.shape and is_hurwitz(A - B @ K)[0]:
            return K, "fallback"
        logger.warning("configured fallback gain does not stabilize the nominal plant")
    return bass_stabilizing_gain(A, B), "gramian"


def initial_gain(sys: ParametricSystem, Q, R, order: Optional[int] = None,
                 fallback_gain=None, rule: Optional[QuadratureRule] = None) -> np.ndarray:
    """
    Nominal LQR gain at the interval midpoint, checked against the surrogate.

    The Kleinman iteration at ξ̄ is seeded by the first stabilizing gain among
    c·B(ξ̄)^T for c in SEED_GAIN_SCALES, the configured fallback gain, and a
    shifted-Gramian gain. The result must stabilize the lifted closed loop of
    order `order` (DEFAULT_PCE_ORDER when omitted).

    Raises
    ------
    UnstabilizableError
        If B(ξ̄) is zero or the nominal pair is not controllable.
    RiccatiConvergenceError
        If the nominal Riccati iteration fails.
    InadmissibleGainError
        If the nominal gain does not stabilize the surrogate.
    """
    xi_bar = sys.midpoint
    A, B = sys.A_at(xi_bar), sys.B_at(xi_bar)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if not np.any(B):
        raise UnstabilizableError(f"B({xi_bar:g}) is identically zero; the nominal pair is unstabilizable")

    K_seed, source = _seed_gain(A, B, fallback_gain)
    logger.debug("Kleinman seed for %s from %s", sys.name, source)
    K0, _ = kleinman_care(A, B, Q, R, K_seed)

    model = build_surrogate(sys, DEFAULT_PCE_ORDER if order is None else order, rule)
    stable, abscissa = is_hurwitz(closed_loop(model, K0))
    if not stable:
        raise InadmissibleGainError(
            f"nominal LQR gain does not stabilize the order-{model.order} surrogate; "
            "supply an explicit initial gain", abscissa)
    logger.info("initial gain for %s: lifted abscissa %.4g", sys.name, abscissa)
    return K0


# ---------------------------------------------------------
# GRADIENT DESCENT
# ---------------------------------------------------------
def _try_evaluate(model: SurrogateModel, K: np.ndarray, Q, R) -> Optional[CostEvaluation]:
    try:
        return evaluate(model, K, Q, R)
    except PceLqrError:
        return None


def _slack(current: CostEvaluation) -> float:
    return COST_ROUNDING_RTOL * abs(current.cost)


def _fixed_step(model, K, current: CostEvaluation, Q, R,
                cfg: OptimizerConfig) -> Tuple[Optional[np.ndarray], Optional[CostEvaluation], float, Optional[str]]:
    eta = cfg.step_size
    candidate = K - eta * current.gradient
    trial = _try_evaluate(model, candidate, Q, R)
    if trial is None:
        return None, None, eta, "inadmissible"
    if trial.cost > current.cost + _slack(current):
        return None, trial, eta, "cost_increase"
    return candidate, trial, eta, None


def _armijo_step(model, K, current: CostEvaluation, Q, R,
                 cfg: OptimizerConfig) -> Tuple[Optional[np.ndarray], Optional[CostEvaluation], float, Optional[str]]:
    eta = cfg.step_size
    decrease = current.grad_norm ** 2
    for _ in range(MAX_BACKTRACKS):
        candidate = K - eta * current.gradient
        trial = _try_evaluate(model, candidate, Q, R)
        if trial is not None and trial.cost <= current.cost - cfg.armijo_c * eta * decrease:
            return candidate, trial, eta, None
        eta *= cfg.armijo_shrink
    return None, None, eta, "line_search_exhausted"


def optimize(model: SurrogateModel, K0, Q, R,
             cfg: Optional[OptimizerConfig] = None) -> OptimizationReport:
    """
    Gradient descent K_{k+1} = K_k - η_k ∇Ĵ_N(K_k) on the surrogate cost.

    Parameters
    ----------
    model : SurrogateModel
        Lifted plant from `build_surrogate`.
    K0 : (n_u, n_x) array
        Starting gain; must stabilize the lifted closed loop.
    Q, R : arrays
        Cost weights.
    cfg : OptimizerConfig
        Step size, tolerance, iteration cap and line-search mode.

    Returns
    -------
    OptimizationReport
        termination is
        - "converged"      when ||∇Ĵ_N||_F <= grad_tol,
        - "max_iters"      when the cap is reached,
        - "step_rejected"  when a fixed step leaves the admissible set or
                           raises the cost, Armijo backtracking runs out, or
                           the cost exceeds divergence_factor × initial cost.
        `diagnostics` names the reason in the last case. Fixed mode never
        shrinks the step on its own.

    Raises
    ------
    InadmissibleGainError
        If K0 is not admissible for the model.
    """
    cfg = cfg or OptimizerConfig()
    start = time.perf_counter()
    K = np.atleast_2d(np.asarray(K0, dtype=float)).copy()
    current = evaluate(model, K, Q, R)
    initial_cost = current.cost
    iterates = [IterateRecord(0, current.cost, current.grad_norm, 0.0)]
    step_fn = _fixed_step if cfg.line_search == "fixed" else _armijo_step

    termination, diagnostics = "max_iters", None
    accepted, last_step = 0, 0.0
    if current.grad_norm <= cfg.grad_tol:
        termination = "converged"
    else:
        for k in range(1, int(cfg.max_iters) + 1):
            candidate, trial, eta, reason = step_fn(model, K, current, Q, R, cfg)
            if trial is not None and trial.cost > cfg.divergence_factor * initial_cost:
                termination, diagnostics = "step_rejected", "diverged"
                break
            if reason is not None:
                termination, diagnostics = "step_rejected", reason
                break

            K, current, accepted, last_step = candidate, trial, k, eta
            if k % cfg.record_every == 0:
                iterates.append(IterateRecord(k, current.cost, current.grad_norm, eta))
            if k % LOG_EVERY == 0:
                logger.info("iter %d: cost %.10g, |grad| %.3e", k, current.cost, current.grad_norm)
            if current.grad_norm <= cfg.grad_tol:
                termination = "converged"
                break

    if iterates[-1].iteration != accepted:
        iterates.append(IterateRecord(accepted, current.cost, current.grad_norm, last_step))

    wall_time = time.perf_counter() - start
    log = logger.info if termination == "converged" else logger.warning
    log("optimizer stopped: %s%s after %d iterations, cost %.10g, |grad| %.3e (%.2fs)",
        termination, f" ({diagnostics})" if diagnostics else "", accepted,
        current.cost, current.grad_norm, wall_time)

    return OptimizationReport(
        iterates=iterates,
        final_gain=K,
        termination=termination,
        wall_time=wall_time,
        initial_gain=np.atleast_2d(np.asarray(K0, dtype=float)),
        final_cost=current.cost,
        final_grad_norm=current.grad_norm,
        iterations=accepted,
        diagnostics=diagnostics,
    )


def tail_linear_fit(report: OptimizationReport, fraction: float = 0.5) -> Tuple[float, float]:
    """
    Fit log ||∇Ĵ|| against the iteration index over the last `fraction` of the run.

    Returns (slope, R²). A negative slope with R² close to one indicates
    linear convergence of the gradient norm.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    its = np.array([r.iteration for r in report.iterates], dtype=float)
    norms = report.grad_norms
    keep = (its >= its[-1] * (1.0 - fraction)) & (norms > 0)
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least three recorded iterates in the tail")
    fit = linregress(its[keep], np.log(norms[keep]))
    return float(fit.slope), float(fit.rvalue ** 2)
