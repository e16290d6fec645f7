"""
Tailwise — Error hierarchy
"""


class TailwiseError(Exception):
    """Base class for every error raised by the library."""


class DomainError(TailwiseError, ValueError):
    """An argument lies outside the domain of the operation."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SingularityError(TailwiseError, ArithmeticError):
    """A delta-correction denominator vanishes (the KurtI blow-up)."""

    def __init__(self, message: str, denominator: float,
                 bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.denominator = denominator
        self.bracket = bracket


class IterationError(TailwiseError, ArithmeticError):
    """Newton-Raphson hit a vanishing derivative."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class NoClosedFormError(TailwiseError):
    """Exact VaR/ES requested for a family without closed forms."""


class UnsupportedSpecError(TailwiseError):
    """The operation has no model for this loss family."""


class QuadratureError(TailwiseError):
    """The integrator could not reach the requested tolerance."""


class EstimationError(TailwiseError):
    """A Monte-Carlo estimate could not be formed from the draws."""
