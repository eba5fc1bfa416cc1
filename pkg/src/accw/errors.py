"""Exception hierarchy.

Validation errors signal bad input (CLI exit code 2); numerical errors
signal solver failures on valid input (CLI exit code 1).
"""


class AccwError(Exception):
    """Base class for all library errors."""


class ValidationError(AccwError):
    """Invalid input: parameter out of range, malformed file, bad config."""


class NumericalError(AccwError):
    """A numerical procedure failed on structurally valid input."""


class ConvergenceError(NumericalError):
    """An iteration did not reach its tolerance.

    Carries the last residual so callers can decide whether to retry.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DefectiveMatrixError(NumericalError):
    """Eigenvector matrix too ill-conditioned to trust a spectral function."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class CollocationError(NumericalError):
    """Coefficient fit did not meet its reconstruction tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
