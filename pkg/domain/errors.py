# domain/errors.py
from __future__ import annotations

from typing import Optional


class PceLqrError(Exception):
    """
    Base class for every failure raised by the surrogate pipeline.

    Each subclass carries a short machine-readable `code` (e.g. "not_hurwitz")
    so the CLI can map failures to exit codes and JSON diagnostics without
    parsing messages.
    """
    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidIntervalError(PceLqrError, ValueError):
    code = "invalid_interval"


class ParameterDimensionError(PceLqrError, ValueError):
    code = "vector_parameter"


class QuadratureError(PceLqrError, ValueError):
    code = "invalid_rule"


class ShapeMismatchError(PceLqrError, ValueError):
    code = "shape_mismatch"


class NonFiniteMatrixError(PceLqrError, ValueError):
    code = "non_finite"


class NotHurwitzError(PceLqrError):
    """A Lyapunov solve was requested for a matrix that is not Hurwitz."""
    code = "not_hurwitz"

    def __init__(self, message: str, abscissa: float):
        super().__init__(f"{message} (spectral abscissa {abscissa:.6g})")
        self.abscissa = float(abscissa)


class InadmissibleGainError(NotHurwitzError):
    """The gain does not stabilize the (lifted or per-parameter) closed loop."""
    code = "inadmissible_gain"


class UnstabilizableError(PceLqrError):
    code = "unstabilizable"


class RiccatiConvergenceError(PceLqrError):
    code = "riccati_failed"


class ConfigError(PceLqrError):
    """Run configuration could not be parsed; names the offending field/line."""
    code = "config_invalid"

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


# ---- Soft failures: warnings, never exceptions ----
class OutsideSupportWarning(UserWarning):
    """Basis evaluated at a parameter outside its interval."""


class IllConditionedWarning(UserWarning):
    """Lyapunov solve accepted but the operator looks ill-conditioned."""


class QuadratureAccuracyWarning(UserWarning):
    """Doubling self-check of a quadrature-based quantity failed."""
