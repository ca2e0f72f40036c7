"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs (CLI exit code 1) and
``NumericalError`` for solver/convergence failures (CLI exit code 2).
"""


class CVGNError(Exception):
    """Base class for all package errors."""


class ValidationError(CVGNError, ValueError):
    """Invalid input. ``key`` names the offending parameter when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UnphysicalStateError(ValidationError):
    """Covariance matrix violates the uncertainty principle."""


class DomainError(ValidationError):
    """Argument outside the domain of a function."""


class NumericalError(CVGNError, ArithmeticError):
    """Numerical failure that is not the caller's fault."""


class DegeneracyError(NumericalError):
    """Eigenvalues of Omega*C do not come in purely imaginary +/- pairs."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnstableSystemError(NumericalError):
    """Drift matrix has an eigenvalue with non-negative real part."""


class IntegrationBlowupError(NumericalError):
    pass


class BracketError(NumericalError):
    """Threshold indicator is not bracketed by the search interval."""
