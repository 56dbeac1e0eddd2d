"""Exception hierarchy.

``StatisticalError`` subclasses signal that the data or model cannot support
the requested computation; the CLI maps them to exit code 3.
"""


class DfgofError(Exception):
    """Base class for all package errors."""


class StatisticalError(DfgofError):
    pass


class InvalidGrid(DfgofError, ValueError):
    pass


class GridTooFine(StatisticalError):
    """A cell probability fell below the floor; coarsen the grid."""


class InvalidFamily(DfgofError, ValueError):
    pass


class OutOfSupport(StatisticalError):
    pass


class NonOrthonormalScores(DfgofError, ValueError):
    pass


class DegenerateReflection(DfgofError, ValueError):
    pass


class ScoreUnavailable(StatisticalError):
    pass


class SingularInformation(StatisticalError):
    """Parameters are not locally identifiable on this grid."""


class SpaceMismatch(DfgofError, ValueError):
    pass


class DimensionMismatch(DfgofError, ValueError):
    pass


class MleNotFound(StatisticalError):
    pass


class TailExhausted(StatisticalError):
    pass


class SingularCovariance(StatisticalError):
    pass


class AsymmetricGrids(DfgofError, ValueError):
    pass


class TableUnreliable(StatisticalError):
    pass
