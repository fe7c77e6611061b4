"""Exception types raised across the package."""


class SeedBankError(Exception):
    """Base class for all package errors."""


class DomainError(SeedBankError, ValueError):
    """A parameter or input lies outside the model's domain."""


class DimensionError(SeedBankError, ValueError):
    """Two distributions live on state spaces of different size."""


class ResourceError(SeedBankError, RuntimeError):
    """A configured event, step or memory budget was exhausted."""


class SingularSystemError(SeedBankError, ArithmeticError):
    """A linear solve failed."""
