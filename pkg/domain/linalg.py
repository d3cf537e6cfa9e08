# domain/linalg.py
from __future__ import annotations

import logging
import warnings
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from config import (
    HURWITZ_MARGIN,
    KLEINMAN_MAX_ITER,
    KLEINMAN_TOL,
    KRON_REFERENCE_MAX_DIM,
    LYAP_CONDITION_WARN,
    LYAP_RESIDUAL_RTOL,
    RICCATI_RESIDUAL_TOL,
)
from domain.errors import (
    IllConditionedWarning,
    NonFiniteMatrixError,
    NotHurwitzError,
    RiccatiConvergenceError,
    ShapeMismatchError,
    UnstabilizableError,
)
from domain.models import LyapunovSolution

logger = logging.getLogger(__name__)

SIDES = ("transposed", "plain")


def _square(A, label: str = "A") -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"{label} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteMatrixError(f"{label} has non-finite entries")
    return A


def spectral_abscissa(A) -> float:
    """Largest real part over the eigenvalues of A (read off the complex Schur form)."""
    A = _square(A)
    T = sla.schur(A, output="complex")[0]
    return float(np.max(np.real(np.diag(T))))


def is_hurwitz(A, margin_tol: float = HURWITZ_MARGIN) -> Tuple[bool, float]:
    """
    Hurwitz test with a margin.

    Returns
    -------
    Tuple[bool, float]
        (True, abscissa) when every eigenvalue has real part < -margin_tol,
        (False, abscissa) otherwise.

    Raises
    ------
    NonFiniteMatrixError
        If A has NaN/inf entries.
    """
    abscissa = spectral_abscissa(A)
    return abscissa < -margin_tol, abscissa


def lyapunov_residual(A: np.ndarray, P: np.ndarray, Q: np.ndarray, side: str) -> np.ndarray:
    if side == "transposed":
        return A.T @ P + P @ A + Q
    return A @ P + P @ A.T + Q


def _solve_schur(A: np.ndarray, Q: np.ndarray, side: str) -> np.ndarray:
    # scipy solves  M X + X M^H = C  by Bartels–Stewart on the real Schur form
    M = A.T if side == "transposed" else A
    return sla.solve_continuous_lyapunov(M, -Q)


def _solve_kron(A: np.ndarray, Q: np.ndarray, side: str) -> np.ndarray:
    n = A.shape[0]
    M = A.T if side == "transposed" else A
    I = np.eye(n)
    # vec(M X + X M^T) = (I ⊗ M + M ⊗ I) vec(X), column-major vec
    L = np.kron(I, M) + np.kron(M, I)
    x = np.linalg.solve(L, -Q.reshape(-1, order="F"))
    return x.reshape(n, n, order="F")


def solve_lyapunov(A, Q, side: str = "transposed", method: str = "schur",
                   check_hurwitz: bool = True) -> LyapunovSolution:
    """
    Solve a continuous-time Lyapunov equation for a Hurwitz A.

    side="transposed" solves A^T P + P A + Q = 0,
    side="plain"      solves A Y + Y A^T + Q = 0.

    Parameters
    ----------
    A : (n, n) array
        Must be Hurwitz (checked unless `check_hurwitz=False`).
    Q : (n, n) array
        Symmetric forcing; need not be definite.
    side : str
        "transposed" or "plain".
    method : str
        "schur" (Bartels–Stewart, default) or "kron" (vectorized dense solve,
        O(n^6); a reference path for n <= 64).

    Returns
    -------
    LyapunovSolution
        Symmetrized solution and its residual norm. If the first residual
        exceeds LYAP_RESIDUAL_RTOL · (1 + ||Q||_F), one step of iterative
        refinement is applied and noted in `warnings`.

    Raises
    ------
    NotHurwitzError
        With the spectral abscissa, when A is not Hurwitz.
    """
    A = _square(A, "A")
    Q = _square(Q, "Q")
    if A.shape != Q.shape:
        raise ShapeMismatchError(f"A {A.shape} and Q {Q.shape} must have the same shape")
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    if method not in ("schur", "kron"):
        raise ValueError(f"method must be 'schur' or 'kron', got {method!r}")
    if method == "kron" and A.shape[0] > KRON_REFERENCE_MAX_DIM:
        raise ValueError(f"kron method is limited to n <= {KRON_REFERENCE_MAX_DIM}")

    if check_hurwitz:
        stable, abscissa = is_hurwitz(A)
        if not stable:
            raise NotHurwitzError("Lyapunov solve needs a Hurwitz matrix", abscissa)

    solver = _solve_schur if method == "schur" else _solve_kron
    P = solver(A, Q, side)
    P = 0.5 * (P + P.T)
    notes = []

    q_norm = np.linalg.norm(Q, "fro")
    tol = LYAP_RESIDUAL_RTOL * (1.0 + q_norm)
    residual = np.linalg.norm(lyapunov_residual(A, P, Q, side), "fro")
    if residual > tol:
        # one refinement step: solve for the correction driven by the residual
        correction = solver(A, lyapunov_residual(A, P, Q, side), side)
        P = P + 0.5 * (correction + correction.T)
        residual = np.linalg.norm(lyapunov_residual(A, P, Q, side), "fro")
        notes.append("iterative_refinement")
        logger.info("Lyapunov solve refined; residual now %.3e (tol %.3e)", residual, tol)

    # ||L^{-1}|| >= ||P|| / ||Q|| and ||L|| <= 2 ||A||; their product estimates cond(L)
    if q_norm > 0:
        cond = 2.0 * np.linalg.norm(A, "fro") * np.linalg.norm(P, "fro") / q_norm
        if cond > LYAP_CONDITION_WARN:
            msg = f"Lyapunov operator looks ill-conditioned (estimate {cond:.2e})"
            notes.append("ill_conditioned")
            warnings.warn(msg, IllConditionedWarning, stacklevel=2)
            logger.warning(msg)

    return LyapunovSolution(P=P, residual_norm=float(residual), warnings=notes)


def riccati_residual(A, B, Q, R, P) -> float:
    """Frobenius norm of A^T P + P A - P B R^{-1} B^T P + Q."""
    A, P = np.asarray(A, float), np.asarray(P, float)
    B = np.atleast_2d(np.asarray(B, float))
    BtP = B.T @ P
    res = A.T @ P + P @ A - BtP.T @ np.linalg.solve(np.atleast_2d(R), BtP) + Q
    return float(np.linalg.norm(res, "fro"))


def bass_stabilizing_gain(A, B, shift: float = 1.0) -> np.ndarray:
    """
    Stabilizing gain from a shifted controllability Gramian.

    With β > max(0, abscissa(A)) and W solving
        (A + βI) W + W (A + βI)^T = B B^T   (W > 0 iff (A, B) controllable),
    K = B^T W^{-1} gives (A - BK) W + W (A - BK)^T = -(2βW + BB^T) < 0.

    Raises
    ------
    UnstabilizableError
        When W is singular, i.e. (A, B) is not controllable.
    """
    A = _square(A)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    beta = max(0.0, spectral_abscissa(A)) + shift
    A_shift = -(A + beta * np.eye(A.shape[0]))
    # A_shift W + W A_shift^T + BB^T = 0  <=>  (A+βI)W + W(A+βI)^T = BB^T
    W = solve_lyapunov(A_shift, B @ B.T, side="plain").P
    eig_min = np.min(np.linalg.eigvalsh(W))
    if eig_min <= 1e-12 * max(1.0, np.max(np.abs(W))):
        raise UnstabilizableError("pair (A, B) is not controllable; shifted Gramian is singular")
    return np.linalg.solve(W, B).T


def kleinman_care(A, B, Q, R, K0, tol: float = KLEINMAN_TOL,
                  max_iter: int = KLEINMAN_MAX_ITER) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kleinman–Newton iteration for the continuous algebraic Riccati equation.

    K_{j+1} = R^{-1} B^T P_j, where P_j solves
        (A - B K_j)^T P_j + P_j (A - B K_j) + Q + K_j^T R K_j = 0.

    Stops when ||K_{j+1} - K_j||_F <= tol or after `max_iter` steps.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        (K*, P*) with P* consistent with K* (re-solved at the final gain).

    Raises
    ------
    UnstabilizableError
        If B is identically zero.
    NotHurwitzError
        If K0 does not stabilize A - B K0.
    RiccatiConvergenceError
        If an intermediate gain loses stability (numerical failure).
    """
    A = _square(A)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = _square(Q, "Q")
    R = _square(R, "R")
    K = np.atleast_2d(np.asarray(K0, dtype=float))
    if not np.any(B):
        raise UnstabilizableError("B is identically zero; the pair is unstabilizable")
    if K.shape != (B.shape[1], A.shape[0]):
        raise ShapeMismatchError(f"K0 must have shape {(B.shape[1], A.shape[0])}, got {K.shape}")

    stable, abscissa = is_hurwitz(A - B @ K)
    if not stable:
        raise NotHurwitzError("initial gain does not stabilize (A, B)", abscissa)

    step = float("inf")
    for j in range(max_iter):
        P = solve_lyapunov(A - B @ K, Q + K.T @ R @ K, check_hurwitz=False).P
        K_next = np.linalg.solve(R, B.T @ P)
        stable, abscissa = is_hurwitz(A - B @ K_next)
        if not stable:
            raise RiccatiConvergenceError(
                f"Kleinman iterate {j + 1} is not stabilizing (abscissa {abscissa:.3e})")
        step = np.linalg.norm(K_next - K, "fro")
        K = K_next
        if step <= tol:
            logger.debug("Kleinman converged after %d iterations", j + 1)
            break
    else:
        logger.warning("Kleinman iteration hit max_iter=%d (last step %.3e)", max_iter, step)

    P = solve_lyapunov(A - B @ K, Q + K.T @ R @ K, check_hurwitz=False).P
    residual = riccati_residual(A, B, Q, R, P)
    if residual > RICCATI_RESIDUAL_TOL * (1.0 + np.linalg.norm(Q, "fro")):
        logger.warning("Riccati residual %.3e above tolerance", residual)
    return K, P
