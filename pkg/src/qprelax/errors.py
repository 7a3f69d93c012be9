"""Exception types shared across the package."""


class QpRelaxError(Exception):
    """Base class for all package errors."""


class SolverFailure(QpRelaxError):
    """An auxiliary solve needed by a routine did not terminate cleanly."""


class RankMismatch(QpRelaxError):
    """Numerical rank of a matrix differs from the rank the caller requires."""


class DegenerateFace(QpRelaxError):
    """The facial-reduction matrix [U V] is numerically singular."""


class ConvergenceFailure(QpRelaxError):
    """An eigenvalue computation failed to converge."""


class TooLarge(QpRelaxError):
    """Input exceeds the limits of an enumeration oracle."""


class ResidualTooLarge(QpRelaxError):
    """A relation that must hold at an optimum is violated beyond tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class InstanceFormatError(QpRelaxError):
    """An instance file could not be parsed."""
