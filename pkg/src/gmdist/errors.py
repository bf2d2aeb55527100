"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/config problems exit 1, numerical
failures exit 2, I/O problems exit 3 (plain OSError), and a failed mixture
verification exits 4.
"""


class UsageError(ValueError):
    """Caller violated a documented precondition (bad argument, bad config)."""


class InsufficientDataError(UsageError):
    """An input moment list or sample file is too short for the requested degree."""


class NumericalError(RuntimeError):
    """A numerical subroutine could not produce a trustworthy result."""


class NotConvergedError(NumericalError):
    """A result was requested from a solve that did not reach optimality."""


class ExtractionFailedError(NumericalError):
    """Atom extraction from a flat moment matrix broke down."""


class DriverError(NumericalError):
    """Every relaxation order failed; the hierarchy produced no usable record."""
