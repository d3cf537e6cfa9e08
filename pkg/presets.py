# presets.py
# Compiled-in plants and their reproduction targets, so `reproduce` runs with zero setup.
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_GRAD_TOL, DEFAULT_PCE_ORDER, DEFAULT_STEP_SIZE
from domain.errors import ConfigError
from domain.models import ParametricSystem, PolynomialMatrix


@dataclass(frozen=True, eq=False)
class ReproductionTarget:
    """Reference optimum a preset run is checked against."""
    gain: np.ndarray
    gain_tol: float
    cost: float
    cost_tol: float
    iteration_window: Optional[Tuple[int, int]] = None
    # a converged run with cost at most this passes on cost even if the gain is off
    cost_only_ceiling: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Preset:
    name: str
    system: ParametricSystem
    Q: np.ndarray
    R: np.ndarray
    order: int = DEFAULT_PCE_ORDER
    step_size: float = DEFAULT_STEP_SIZE
    grad_tol: float = DEFAULT_GRAD_TOL
    target: Optional[ReproductionTarget] = None
    notes: Dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------
# PLANTS
# ---------------------------------------------------------
def illustrative_system() -> ParametricSystem:
    """A(ξ) = [[0.2 + 0.3ξ³, -0.4], [0.1, 0.5]], constant B, ξ ~ U(-1, 1)."""
    A = PolynomialMatrix.from_entries([
        [[0.2, 0.0, 0.0, 0.3], [-0.4]],
        [[0.1], [0.5]],
    ])
    B = PolynomialMatrix.constant([[0.5, 0.1], [0.2, 1.0]])
    return ParametricSystem.from_polynomials(A, B, (-1.0, 1.0), name="illustrative")


def stiffness_coefficients() -> np.ndarray:
    """Ascending coefficients of κ(ξ) = (1 + ξ/5)^4."""
    return np.polynomial.polynomial.polypow([1.0, 0.2], 4)


def mass_spring_system(masses: Sequence[float] = (1.0, 1.0, 1.0, 1.0)) -> ParametricSystem:
    """
    Four masses in a free-free chain joined by springs of stiffness κ(ξ).

    State is [positions; velocities]; the single input is a force on the
    first mass. ξ ~ U(-1, 1).
    """
    m = np.asarray(masses, dtype=float)
    if m.shape != (4,) or np.any(m <= 0):
        raise ConfigError("mass-spring preset needs four positive masses", field="system.masses")
    chain = np.array([
        [-1.0, 1.0, 0.0, 0.0],
        [1.0, -2.0, 1.0, 0.0],
        [0.0, 1.0, -2.0, 1.0],
        [0.0, 0.0, 1.0, -1.0],
    ]) / m[:, None]
    kappa = stiffness_coefficients()

    coeffs = np.zeros((kappa.size, 8, 8))
    coeffs[0, :4, 4:] = np.eye(4)
    for k, c in enumerate(kappa):
        coeffs[k, 4:, :4] += c * chain
    B = np.zeros((8, 1))
    B[4, 0] = 1.0 / m[0]
    return ParametricSystem.from_polynomials(PolynomialMatrix(coeffs), PolynomialMatrix.constant(B),
                                             (-1.0, 1.0), name="mass-spring")


def scalar_system() -> ParametricSystem:
    """Deterministic dx/dt = -x + u (the parameter does not enter)."""
    return ParametricSystem.from_polynomials(PolynomialMatrix.constant([[-1.0]]),
                                             PolynomialMatrix.constant([[1.0]]),
                                             (-1.0, 1.0), name="scalar")


def scalar_uncertain_system() -> ParametricSystem:
    """dx/dt = ξ x + u with ξ ~ U(-1, 0)."""
    return ParametricSystem.from_polynomials(PolynomialMatrix.from_entries([[[0.0, 1.0]]]),
                                             PolynomialMatrix.constant([[1.0]]),
                                             (-1.0, 0.0), name="scalar-uncertain")


# ---------------------------------------------------------
# REGISTRY
# ---------------------------------------------------------
def _illustrative() -> Preset:
    return Preset(
        name="illustrative",
        system=illustrative_system(),
        Q=np.eye(2),
        R=np.eye(2),
        target=ReproductionTarget(
            gain=np.array([[1.25, -0.10], [-0.82, 1.97]]),
            gain_tol=0.02,
            cost=4.92,
            cost_tol=0.02,
            cost_only_ceiling=4.94,
        ),
    )


def _mass_spring() -> Preset:
    return Preset(
        name="mass-spring",
        system=mass_spring_system(),
        Q=np.eye(8),
        R=np.eye(1),
        target=ReproductionTarget(
            gain=np.array([[2.55, -1.50, 0.91, -0.07, 2.72, 1.70, 1.52, 1.66]]),
            gain_tol=0.03,
            cost=84.47,
            cost_tol=0.1,
            iteration_window=(1000, 3000),
        ),
    )


def _scalar() -> Preset:
    return Preset(name="scalar", system=scalar_system(), Q=np.eye(1), R=np.eye(1),
                  step_size=0.1, grad_tol=1e-8)


def _scalar_uncertain() -> Preset:
    return Preset(name="scalar-uncertain", system=scalar_uncertain_system(),
                  Q=np.eye(1), R=np.eye(1))


PRESETS: Dict[str, Callable[[], Preset]] = {
    "illustrative": _illustrative,
    "mass-spring": _mass_spring,
    "scalar": _scalar,
    "scalar-uncertain": _scalar_uncertain,
}

REPRODUCIBLE = ("illustrative", "mass-spring")


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}",
                          field="system.preset") from None
