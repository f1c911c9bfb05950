"""Exception hierarchy shared by all solver modules.

Two families matter for the CLI exit codes: configuration/validation
problems (exit 2) and solver failures (exit 3).
"""


class FracPNError(Exception):
    """Base class for all package errors."""


class ValidationError(FracPNError, ValueError):
    """Invalid configuration or input data (CLI exit code 2)."""


class InvalidModulationError(ValidationError):
    """Modulation parameters violate the positivity bound a_min > 0."""


class WrongBoundaryError(ValidationError):
    """Operator applied to a field with the wrong boundary kind."""


class IncompleteFieldError(ValidationError):
    """Decaying field is missing its far-field tail model."""


class NonintegrableDensityError(ValidationError):
    """Hilbert transform input has non-integrable tails."""


class InvalidConfigError(ValidationError):
    """Layer configuration or experiment config violates an invariant."""


class InvalidLevelsError(ValidationError):
    """Window levels are not consecutive integers."""


class InvalidInputError(ValidationError):
    """Generic invalid operand (e.g. non-monotone field)."""


class SolverError(FracPNError, RuntimeError):
    """Numerical solver failure (CLI exit code 3)."""


class SolverFailureError(SolverError):
    """Iteration did not converge; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConstrainedTouchingError(SolverError):
    """Constrained minimizer touches a window boundary (bad placement)."""


class SingularStateError(SolverError):
    """Particle state has coincident positions."""


class StabilityError(SolverError):
    """Time stepper detected unstable growth; reduce the step."""
