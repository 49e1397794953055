"""
Exception hierarchy for the chiral decoherence pipeline.

Library code raises these; only the CLI turns them into exit codes.
"""


class ChiralDecoherenceError(Exception):
    """Base class for all errors raised by this package."""
    exit_code = 1


class ConfigError(ChiralDecoherenceError):
    """Invalid run configuration or dataset file."""
    exit_code = 2


class ConvergenceError(ChiralDecoherenceError):
    """A sum, quadrature or truncation failed to converge.

    Args:
        message: Human readable description
        estimate: The achieved error or tail estimate, when known
    """
    exit_code = 3

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class NumericalError(ChiralDecoherenceError):
    """A numerical check failed (unitarity, conditioning, step stability)."""
    exit_code = 4

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class DomainError(ChiralDecoherenceError, ValueError):
    """Argument outside the domain of a pure function."""
    exit_code = 4
