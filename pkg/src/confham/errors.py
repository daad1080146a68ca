"""Exception hierarchy shared by all modules."""


class ConfhamError(Exception):
    """Base class for package errors."""


class ParameterError(ConfhamError, ValueError):
    """Invalid model or option value. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DomainError(ConfhamError, ValueError):
    """An evaluation was requested outside the admissible region."""


class NonConvergenceError(ConfhamError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class IntegrationAbort(ConfhamError, RuntimeError):
    """Time stepping could not continue; carries the last good sample."""

    def __init__(self, message: str, t: float, state=None, trajectory=None):
        super().__init__(f"{message} (t={t:.17g})")
        self.t = t
        self.state = state
        self.trajectory = trajectory
