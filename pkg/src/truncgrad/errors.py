"""Exception types shared across the package.

Plain ``ValueError`` is used for rejected runtime inputs (dimension
mismatches, out-of-range thresholds).  The classes below mark the two
failure modes the CLI maps to distinct exit codes.
"""

__all__ = ["ConfigurationError", "NumericError"]


class ConfigurationError(ValueError):
    """A run was configured inconsistently (bad key, bad range, unstable step)."""


class NumericError(RuntimeError):
    """The minimization produced non-finite values and cannot continue."""
