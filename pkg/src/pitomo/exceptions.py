"""Error types shared across the package.

Plain ValueError is used for garden-variety argument validation; the classes
here name failure modes that callers may want to handle individually.
"""


class CapacityError(ValueError):
    """Dense-matrix operation requested beyond the supported qubit count."""


class UnsupportedSizeError(ValueError):
    """No closed-form coefficients exist for this qubit count."""


class SingularSystemError(RuntimeError):
    """Degenerate direction set: the weighted normal equations are singular."""


class OptimizationFailedError(RuntimeError):
    """Direction search exhausted its budget without a solvable scheme."""


class InsufficientCountsError(ValueError):
    """Too few events recorded to form the requested estimate."""


class IncompleteDataError(ValueError):
    """Count data is missing settings required by the requested operation."""

    def __init__(self, message, missing=()):
        self.missing = list(missing)
        super().__init__(message)


class FileFormatError(ValueError):
    """A data file does not follow the documented schema."""
