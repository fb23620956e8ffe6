"""Exception types shared across the pipeline.

The CLI maps these to exit codes: ValidationError -> 2, NumericalError -> 3.
"""


class HumorkitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HumorkitError):
    """Malformed or inconsistent input data / configuration."""


class NumericalError(HumorkitError):
    """A numerical procedure failed (non-finite loss, no convergence, ...)."""
