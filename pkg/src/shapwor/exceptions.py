"""Exception types raised by shapwor."""


class ShapworError(Exception):
    """Base class for all package errors."""


class CapacityError(ShapworError, ValueError):
    """Requested full enumeration exceeds the coalition cap."""


class ConstructionError(ShapworError, ValueError):
    """A WLS system could not be assembled from the given sample."""


class SingularSystemError(ShapworError, ArithmeticError):
    """The normal-equations matrix is numerically rank deficient.

    ``label`` identifies which sample or bootstrap replicate failed so callers
    can count failures.
    """

    def __init__(self, message, condition=float("inf"), label=None):
        super().__init__(message)
        self.condition = condition
        self.label = label


class EstimationFailedError(ShapworError, RuntimeError):
    """Every bootstrap replicate produced a singular system."""


class UnsupportedOracleError(ShapworError, TypeError):
    """The contribution oracle does not support the requested operation."""


class DegenerateUrnError(ShapworError, ValueError):
    """Urn has no remaining weight while draws are still outstanding."""


class FitError(ShapworError, ValueError):
    """Linear model could not be fitted (rank-deficient design)."""


class DataError(ShapworError, ValueError):
    """Input data could not be parsed.

    ``row`` and ``column`` are 1-based data-row / column positions when known.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
