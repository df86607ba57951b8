"""Exception types shared across the package."""


class PrandtlLabError(Exception):
    """Base class for all package errors."""


class ModelError(PrandtlLabError):
    """Invalid model input, violated precondition, or unusable state."""


class InsufficientMassError(ModelError):
    """Requested stream-function mass exceeds what the profile provides."""


class StepRejected(PrandtlLabError):
    """A march step violated the state contract; caller should shrink dx."""


class SolverBreakdown(PrandtlLabError):
    """Linear solver failed (non-finite values or zero pivot)."""


class FitError(PrandtlLabError):
    """A fitting routine could not produce a usable result."""


class ConfigError(PrandtlLabError):
    """Malformed or inconsistent scenario configuration."""
