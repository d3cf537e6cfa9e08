# domain/models.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import (
    DEFAULT_ARMIJO_C,
    DEFAULT_ARMIJO_SHRINK,
    DEFAULT_GRAD_TOL,
    DEFAULT_MAX_ITERS,
    DEFAULT_STEP_SIZE,
    DIVERGENCE_FACTOR,
)
from domain.errors import NonFiniteMatrixError, ShapeMismatchError

MatrixFunction = Callable[[float], np.ndarray]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LegendreBasis:
    """
    Orthonormal Legendre polynomials of degree 0..N on an interval (a, b).

    The members φ_0..φ_N are orthonormal with respect to the *uniform
    probability* measure on (a, b), i.e. E[φ_i φ_j] = δ_ij. They are the
    canonical [-1, 1] Legendre polynomials composed with the affine map
    t = (2ξ - a - b) / (b - a) and scaled by sqrt(2k + 1).

    Attributes
    ----------
    order : int
        Highest polynomial degree N. The basis vector has length N + 1.
    interval : Tuple[float, float]
        Support Ξ = (a, b) of the scalar parameter, a < b.
    """
    order: int
    interval: Tuple[float, float]

    @property
    def size(self) -> int:
        return self.order + 1


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Gauss–Legendre nodes and probability weights on an interval.

    Weights sum to one, so `weights @ f(nodes)` is E[f(ξ)] for ξ ~ Uniform(a, b).
    An m-node rule is exact for polynomials of degree <= 2m - 1.
    """
    nodes: np.ndarray
    weights: np.ndarray
    interval: Tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])


@dataclass(frozen=True, eq=False)
class PolynomialMatrix:
    """
    Matrix whose entries are polynomials in ξ.

    `coefficients[k]` is the matrix multiplying ξ**k (ascending order), so
    `coefficients` has shape (d + 1, rows, cols). Instances are callable and
    can be passed wherever a matrix-valued function of ξ is expected.
    """
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim == 2:
            c = c[None, :, :]
        if c.ndim != 3 or c.shape[0] == 0:
            raise ShapeMismatchError(
                f"polynomial coefficients must have shape (d+1, r, c), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NonFiniteMatrixError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", _frozen(c))

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence[Sequence[float]]]) -> "PolynomialMatrix":
        """Build from row-major entries, each an ascending coefficient list."""
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ShapeMismatchError("matrix must have at least one row and column")
        n_cols = len(rows[0])
        if any(len(r) != n_cols for r in rows):
            raise ShapeMismatchError("matrix rows have different lengths")
        entries = [[np.atleast_1d(np.asarray(e, dtype=float)) for e in r] for r in rows]
        degree = max(e.shape[0] for r in entries for e in r) - 1
        coeffs = np.zeros((degree + 1, len(rows), n_cols))
        for i, r in enumerate(entries):
            for j, e in enumerate(r):
                coeffs[: e.shape[0], i, j] = e
        return cls(coeffs)

    @classmethod
    def constant(cls, matrix) -> "PolynomialMatrix":
        return cls(np.atleast_2d(np.asarray(matrix, dtype=float))[None, :, :])

    @property
    def degree(self) -> int:
        nonzero = [k for k in range(self.coefficients.shape[0])
                   if np.any(self.coefficients[k] != 0.0)]
        return max(nonzero) if nonzero else 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coefficients.shape[1], self.coefficients.shape[2]

    def __call__(self, xi: float) -> np.ndarray:
        # Horner in ξ over the stacked coefficient matrices
        out = np.zeros(self.shape)
        for c in self.coefficients[::-1]:
            out = out * xi + c
        return out

    def to_entries(self) -> List[List[List[float]]]:
        d = self.degree
        r, c = self.shape
        return [[[float(v) for v in self.coefficients[: d + 1, i, j]] for j in range(c)]
                for i in range(r)]


@dataclass(frozen=True, eq=False)
class ParametricSystem:
    """
    Linear plant dx/dt = A(ξ) x + B(ξ) u with a scalar uniform parameter ξ.

    Parameters
    ----------
    A, B : callable
        Matrix-valued functions of ξ with shapes (n_x, n_x) and (n_x, n_u).
        `PolynomialMatrix` instances are the usual choice.
    interval : Tuple[float, float]
        Support Ξ = (a, b) of ξ ~ Uniform(a, b).
    n_x, n_u : int
        State and input dimensions.
    declared_degree : Optional[int]
        Highest polynomial degree of the entries, when known. Drives the
        default quadrature order; None means "treat as non-polynomial".
    name : str
        Label used in logs and reports.

    Notes
    -----
    `A_at` / `B_at` check shape and finiteness on every call, which is how
    the invariant "finite matrices of the declared shape at every node" is
    enforced during projection.
    """
    A: MatrixFunction
    B: MatrixFunction
    interval: Tuple[float, float]
    n_x: int
    n_u: int
    declared_degree: Optional[int] = None
    name: str = "custom"

    @classmethod
    def from_polynomials(cls, A: PolynomialMatrix, B: PolynomialMatrix,
                         interval: Tuple[float, float], name: str = "custom") -> "ParametricSystem":
        n_x = A.shape[0]
        if A.shape != (n_x, n_x):
            raise ShapeMismatchError(f"A must be square, got {A.shape}")
        if B.shape[0] != n_x:
            raise ShapeMismatchError(f"B must have {n_x} rows, got {B.shape}")
        return cls(A=A, B=B, interval=(float(interval[0]), float(interval[1])),
                   n_x=n_x, n_u=B.shape[1],
                   declared_degree=max(A.degree, B.degree), name=name)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.interval[0] + self.interval[1])

    def _checked(self, fn: MatrixFunction, xi: float, shape: Tuple[int, int], label: str) -> np.ndarray:
        M = np.atleast_2d(np.asarray(fn(float(xi)), dtype=float))
        if M.shape != shape:
            raise ShapeMismatchError(f"{label}({xi}) has shape {M.shape}, expected {shape}")
        if not np.all(np.isfinite(M)):
            raise NonFiniteMatrixError(f"{label}({xi}) has non-finite entries")
        return M

    def A_at(self, xi: float) -> np.ndarray:
        return self._checked(self.A, xi, (self.n_x, self.n_x), "A")

    def B_at(self, xi: float) -> np.ndarray:
        return self._checked(self.B, xi, (self.n_x, self.n_u), "B")

    def closed_loop_at(self, K: np.ndarray, xi: float) -> np.ndarray:
        return self.A_at(xi) - self.B_at(xi) @ K


@dataclass
class LyapunovSolution:
    """
    Solution of a continuous Lyapunov equation.

    Attributes
    ----------
    P : np.ndarray
        Symmetric solution (symmetrized as (P + P^T) / 2).
    residual_norm : float
        Frobenius norm of the equation residual after the solve.
    warnings : List[str]
        Soft diagnostics (ill-conditioning, refinement applied).
    """
    P: np.ndarray
    residual_norm: float
    warnings: List[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """
    Galerkin-lifted deterministic surrogate of a ParametricSystem.

    Attributes
    ----------
    A_lift : np.ndarray
        E[φφ^T ⊗ A(ξ)], shape ((N+1) n_x, (N+1) n_x).
    B_lift : np.ndarray
        E[φφ^T ⊗ B(ξ)], shape ((N+1) n_x, (N+1) n_u).
    selector : np.ndarray
        [I; 0; ...; 0], shape ((N+1) n_x, n_x); maps x0 to the lifted initial state.
    order : int
        PCE order N.
    n_x, n_u : int
        Original plant dimensions.
    basis, rule :
        The basis and quadrature rule used for the projection.
    """
    A_lift: np.ndarray
    B_lift: np.ndarray
    selector: np.ndarray
    order: int
    n_x: int
    n_u: int
    basis: LegendreBasis
    rule: QuadratureRule

    @property
    def blocks(self) -> int:
        return self.order + 1

    @property
    def lifted_dim(self) -> int:
        return self.blocks * self.n_x


@dataclass
class CostEvaluation:
    """
    Surrogate cost and its first-order information at one gain.

    Attributes
    ----------
    cost : float
        Tr(P_lift · selector selector^T).
    dual_cost : float
        Tr[(I ⊗ (Q + K^T R K)) Y_lift]; equals `cost` up to solver accuracy.
    P_lift, Y_lift : np.ndarray
        Solutions of the transposed / plain lifted Lyapunov equations.
    gradient : np.ndarray
        ∇Ĵ_N(K), shape (n_u, n_x).
    hurwitz_margin : float
        Spectral abscissa of the lifted closed loop (negative when admissible).
    """
    cost: float
    dual_cost: float
    P_lift: np.ndarray
    Y_lift: np.ndarray
    gradient: np.ndarray
    hurwitz_margin: float

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.gradient, "fro"))


@dataclass(frozen=True)
class OptimizerConfig:
    """
    Settings of the gradient-descent policy iteration.

    line_search is "fixed" (η_k = step_size, reject rather than shrink) or
    "armijo" (backtrack by `armijo_shrink` until admissible and the
    sufficient-decrease condition with constant `armijo_c` holds).
    """
    step_size: float = DEFAULT_STEP_SIZE
    grad_tol: float = DEFAULT_GRAD_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    line_search: str = "fixed"
    armijo_c: float = DEFAULT_ARMIJO_C
    armijo_shrink: float = DEFAULT_ARMIJO_SHRINK
    record_every: int = 1
    divergence_factor: float = DIVERGENCE_FACTOR

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.line_search not in ("fixed", "armijo"):
            raise ValueError("line_search must be 'fixed' or 'armijo'")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.armijo_shrink < 1.0:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")


class IterateRecord(NamedTuple):
    iteration: int
    cost: float
    grad_norm: float
    step: float


@dataclass
class OptimizationReport:
    """
    Outcome of one `optimize` run.

    Attributes
    ----------
    iterates : List[IterateRecord]
        (iteration, cost, gradient Frobenius norm, step used). Iteration 0 is
        the initial gain with step 0; the last accepted iterate is always kept.
    final_gain : np.ndarray
        Last accepted gain.
    termination : str
        "converged" | "max_iters" | "step_rejected".
    wall_time : float
        Seconds spent inside `optimize`.
    diagnostics : Optional[str]
        Why a step was rejected ("inadmissible", "cost_increase",
        "line_search_exhausted", "diverged").
    """
    iterates: List[IterateRecord]
    final_gain: np.ndarray
    termination: str
    wall_time: float
    initial_gain: np.ndarray
    final_cost: float
    final_grad_norm: float
    iterations: int
    diagnostics: Optional[str] = None

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.iterates])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.iterates])


@dataclass
class ConvergenceStudy:
    """
    Surrogate cost Ĵ_N(K) against a high-resolution reference 𝒥(K) for several N.

    Orders where the gain was inadmissible keep NaN entries and are listed in
    `failures` with the reason.
    """
    orders: List[int]
    surrogate_costs: List[float]
    reference_cost: float
    abs_errors: List[float]
    failures: Dict[int, str] = field(default_factory=dict)


@dataclass
class GradientCheck:
    """Central-difference check of the analytic gradient."""
    max_rel_error: float
    fd_gradient: np.ndarray
    analytic_gradient: np.ndarray
    skipped: List[Tuple[int, int]] = field(default_factory=list)
