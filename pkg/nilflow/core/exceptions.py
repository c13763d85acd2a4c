"""
Error hierarchy for nilflow.

Every engine raises one of these; the CLI maps them to exit codes.
"""


class NilflowError(Exception):
    """Root of all nilflow errors."""


class DimensionMismatchError(NilflowError, ValueError):
    """Operands live in different dimensions."""


class DomainError(NilflowError, ValueError):
    """Argument outside the domain of the requested function."""


class ParseError(NilflowError, ValueError):
    """Malformed word, PL map or measure text."""


class ConfigError(NilflowError, ValueError):
    """Malformed configuration document or environment value."""


class DivergentSeriesError(NilflowError, ValueError):
    """The lattice series has no finite sum for this dimension."""


class WindowError(NilflowError, ValueError):
    """A point fell outside the window on which a measure is given."""


class BudgetExhaustedError(NilflowError, RuntimeError):
    """A radius, search or calibration cap was reached."""


class NonConvergenceError(NilflowError, RuntimeError):
    """A certified evaluation could not reach the requested width."""


class VerificationError(NilflowError, AssertionError):
    """An acceptance check failed."""
