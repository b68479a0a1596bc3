"""Exception hierarchy.

Two families matter to callers: precondition errors (bad inputs, violated
hypotheses) and numerical errors (budgets, non-finite samples, failed
inversions). The CLI maps them to exit codes 1 and 2.
"""

from __future__ import annotations


class WarpedPoissonError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(WarpedPoissonError, ValueError):
    """Inputs violate an operation's preconditions."""


class DomainError(PreconditionError):
    """A radius or level lies outside the admissible range."""


class ConfigError(PreconditionError):
    """Configuration failed schema validation.

    ``path`` is the dotted key path of the offending entry.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidMassError(PreconditionError):
    """A mass-matrix entry is not strictly positive."""


class InsufficientDataError(PreconditionError):
    """Too few points for a fit."""


class NotNonParabolicError(PreconditionError):
    """The manifold has no minimal positive Green's function."""


class InvalidConstructionError(PreconditionError):
    """The requested object does not exist on this manifold."""


class CertificationUnavailableError(PreconditionError):
    """The certified lower bound is zero, so certified mode cannot be used."""


class HypothesisViolatedError(PreconditionError):
    """A hypothesis that the requested check depends on does not hold."""


class NumericalError(WarpedPoissonError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""


class EvaluationError(NumericalError):
    """An integrand returned a non-finite sample."""

    def __init__(self, message: str, abscissa: float):
        self.abscissa = abscissa
        super().__init__(f"{message} (at t={abscissa!r})")


class BudgetExceededError(NumericalError):
    """Tolerance was not met within the evaluation or radius budget."""

    def __init__(self, message: str, best_estimate: float = float("nan"),
                 error_estimate: float = float("nan")):
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
        super().__init__(f"{message} (best estimate {best_estimate!r}, "
                         f"error {error_estimate!r})")


class ClassificationInconclusiveError(NumericalError):
    """A convergence test on a radial integral could not decide."""

    def __init__(self, message: str, integral: str):
        self.integral = integral
        super().__init__(f"{message}: {integral}")


class InversionError(NumericalError):
    """Root finding for a level set could not bracket the level."""


class ZeroAverageViolationError(NumericalError):
    """A source that should have zero total mass does not, to tolerance."""


class ConsistencyError(NumericalError):
    """An internal monotonicity or consistency assertion failed."""
