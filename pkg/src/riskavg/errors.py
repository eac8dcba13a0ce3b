"""Exception types shared across the package."""


class RiskAvgError(Exception):
    """Base class for all package errors."""


class DomainError(RiskAvgError, ValueError):
    """An argument lies outside the domain of the requested function."""


class EmptyBallError(RiskAvgError):
    """The kernel mass inside the uncertainty ball is zero.

    This is a structural outcome (no draws or atoms inside the ball), not a
    floating-point failure, so callers may recover from it.
    """

    def __init__(self, message: str, acceptance_rate: float = 0.0, n_retained: int = 0):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
        self.n_retained = n_retained


class TailUnderflowError(RiskAvgError, ArithmeticError):
    """Both chi-squared cdfs underflow even when evaluated in log space."""


class ConvergenceError(RiskAvgError, ArithmeticError):
    """An iterative special-function evaluation failed to converge."""


class ConfigError(RiskAvgError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, location: str | None = None, module: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
        self.module = module
