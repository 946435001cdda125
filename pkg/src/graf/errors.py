"""Exception types raised across the package."""


class GrafError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(GrafError, ValueError):
    """An input violates a documented precondition."""


class UsageError(GrafError, RuntimeError):
    """An API was called in the wrong state (e.g. backward without a root)."""


class NumericalError(GrafError, FloatingPointError):
    """A NaN or Inf was produced; ``op`` names the offending operation."""

    def __init__(self, message, op=None):
        super().__init__(message)
        self.op = op
