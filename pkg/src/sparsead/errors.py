"""Exception types. Each carries the CLI exit code it maps to."""


class SparseAdError(Exception):
    """Base class for library errors."""

    exit_code = 1


class FormatError(SparseAdError):
    """A file does not follow its binary or text layout.

    ``code`` distinguishes the failure: ``"bad_magic"``, ``"bad_header"``,
    ``"dimension_mismatch"``, ``"checksum"`` or ``"truncated"``.
    """

    exit_code = 3

    def __init__(self, message, code="bad_header"):
        super().__init__(message)
        self.code = code


class ConvergenceError(SparseAdError):
    """An iterative solver hit its iteration cap.

    The last iterate and a convergence diagnostic travel with the error so
    callers can inspect or salvage them.
    """

    exit_code = 4

    def __init__(self, message, last_iterate=None, gap=None, history=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gap = gap
        self.history = history


class InfeasibleError(SparseAdError):
    exit_code = 5


class DimensionError(SparseAdError, ValueError):
    """Shapes of the operands do not agree."""

    exit_code = 6


class BlockPartitionError(SparseAdError):
    exit_code = 7


class MissingDataError(SparseAdError):
    """Required inputs are absent (empty training set, unscored frames...)."""

    exit_code = 8
