from __future__ import annotations

__all__ = [
    "QuantLabError",
    "ParameterDomainError",
    "SingularityError",
    "ConsistencyError",
    "ConstructionError",
    "TruncationError",
    "ShapeError",
    "PreconditionError",
    "AccuracyError",
    "DegenerateTraceError",
    "StepSizeError",
]


# ------------------------
# Errors
# ------------------------
class QuantLabError(Exception):
    """Base class for laboratory errors.

    The `code` attribute is the stable machine code written into reports.
    """

    code: str = "quantlab_error"


class ParameterDomainError(QuantLabError, ValueError):
    code = "domain_error"


class SingularityError(QuantLabError):
    code = "singularity"


class ConsistencyError(QuantLabError):
    """An invariant that must follow from a construction did not hold."""

    code = "internal_consistency"

    def __init__(self, invariant: str, residual: float, message: str | None = None) -> None:
        self.invariant = invariant
        self.residual = float(residual)
        super().__init__(message or f"{invariant} violated (residual {self.residual:.3e})")


class ConstructionError(QuantLabError):
    code = "construction_failed"

    def __init__(self, invariant: str, message: str | None = None) -> None:
        self.invariant = invariant
        super().__init__(message or f"construction failed: {invariant}")


class TruncationError(QuantLabError):
    code = "truncation"


class ShapeError(QuantLabError, ValueError):
    code = "shape_mismatch"


class PreconditionError(QuantLabError):
    code = "precondition"


class AccuracyError(QuantLabError):
    code = "accuracy"

    def __init__(self, message: str, residual: float = float("nan")) -> None:
        self.residual = float(residual)
        super().__init__(message)


class DegenerateTraceError(AccuracyError):
    code = "degenerate_trace"


class StepSizeError(QuantLabError):
    code = "step_size"
