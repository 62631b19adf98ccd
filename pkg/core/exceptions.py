"""
Exception hierarchy for the DRDM laboratory.

Every failure category the simulation can raise has its own class so callers
(and the CLI exit-code mapping) can tell them apart.
"""

from typing import Optional


class LabError(Exception):
    """Base class for all laboratory errors."""
    pass


class DimensionError(LabError, ValueError):
    """Raised when vector or matrix shapes do not line up."""
    pass


class ParameterError(LabError, ValueError):
    """Raised when an argument violates an operation's precondition."""
    pass


class StateError(LabError, RuntimeError):
    """Raised when an operation is attempted on unusable state (e.g. an empty shard)."""
    pass


class InvariantViolation(LabError, RuntimeError):
    """Raised when a value that must satisfy an invariant does not."""
    pass


class UnsupportedConfigurationError(LabError):
    """Raised when an operation is requested for a configuration it cannot handle."""
    pass


class FormatError(LabError, ValueError):
    """Raised when a data file cannot be parsed.

    Args:
        message: Description of the problem
        offset: Byte offset in the file where the problem was detected
    """

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
