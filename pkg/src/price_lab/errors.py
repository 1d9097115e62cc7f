"""Exception hierarchy shared by every price_lab module."""

from __future__ import annotations


class PriceLabError(Exception):
    """Base class for all library errors."""


class DomainError(PriceLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class UnsupportedSpaceError(PriceLabError, ValueError):
    """The operation is not defined on the given space form."""


class SingularBoundaryError(DomainError):
    """A Poisson kernel was evaluated exactly at its boundary pole."""


class ParameterConflictError(PriceLabError, ValueError):
    """A terminating hypergeometric series hits a pole before truncation."""


class PreconditionError(PriceLabError, ValueError):
    """A scenario precondition does not hold for the given input."""


class NotFiniteEnergyError(PreconditionError):
    """The Dirichlet energy does not plateau on the sampled grid."""


class NumericalViolationError(PriceLabError, ArithmeticError):
    """A computed quantity violates a proven bound (e.g. mu >= 1)."""


class NonConvergenceError(PriceLabError, ArithmeticError):
    """Quadrature refinement budget exhausted before reaching tolerance.

    The best available estimate and its error are kept on the exception.
    """

    def __init__(self, message: str, value: float, err_est: float):
        super().__init__(message)
        self.value = value
        self.err_est = err_est
