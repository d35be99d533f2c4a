"""Exception types raised across the package.

Every data or computation failure raised by this package derives from
:class:`CellwellError`, so callers (notably the CLI) can distinguish
expected domain errors from genuine bugs.
"""


class CellwellError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTable(CellwellError):
    """A table violates a structural invariant (shapes, names, emptiness)."""


class MissingColumn(CellwellError):
    """A CSV is missing a required column or a row has the wrong width."""


class NonNumericCell(CellwellError):
    """A value that must be a finite number is missing, non-numeric or non-finite."""


class WellWithSingleCell(CellwellError):
    """A well contributes fewer than two cells."""


class DuplicateWell(CellwellError):
    """A well id appears more than once where ids must be unique."""


class RankNotPermutation(CellwellError):
    """Bio-ranks are not a permutation of 1..n_wells."""


class ClassRankInconsistent(CellwellError):
    """Bio-classes are not non-decreasing along the bio-rank order."""


class UnknownClassLabel(CellwellError):
    """A bio-class label is not one of Low, Medium, High."""


class WellIdMismatch(CellwellError):
    """Two tables do not cover the same set of well ids.

    The symmetric difference is stored on ``mismatched`` and listed in the
    message, so the report is identical regardless of argument order.
    """

    def __init__(self, mismatched, detail=""):
        self.mismatched = tuple(sorted(mismatched))
        msg = "well ids do not match; symmetric difference: " + ", ".join(self.mismatched)
        if detail:
            msg = detail + ": " + msg
        super().__init__(msg)


class EmptyInput(CellwellError):
    """An operation received an empty collection of values."""


class QOutOfRange(CellwellError):
    """A quantile level is outside the open interval (0, 1)."""


class UnknownStatistic(CellwellError):
    """A summary statistic code is not recognised."""


class SdOfSingleton(CellwellError):
    """A sample standard deviation was requested for fewer than two values."""


class DegenerateData(CellwellError):
    """The data carry no usable variation for the requested operation."""


class DimensionMismatch(CellwellError):
    """Array shapes are incompatible with the operation."""


class NotOrthonormal(CellwellError):
    """Basis columns are not orthonormal within tolerance."""


class NotUnitDirection(CellwellError):
    """A direction vector does not have unit Euclidean norm within tolerance."""


class ZeroVarianceColumn(CellwellError):
    """A column has zero sample variance where a positive one is required."""


class ZeroVarianceBlock(CellwellError):
    """A within-well column has zero sample variance."""


class SingleClass(CellwellError):
    """Binary training data contain only one class."""


class MissingClass(CellwellError):
    """Multiclass training data do not contain every bio-class."""


class NonConverged(CellwellError):
    """The solver hit its iteration cap before meeting the stopping rule."""

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"solver did not converge after {iterations} iterations; "
            f"KKT residual {residual:.3e} above tolerance"
        )

    def __reduce__(self):
        # Keeps the exception picklable across process-pool boundaries.
        return (NonConverged, (self.residual, self.iterations))


class EmptyWell(CellwellError):
    """A well has no classified cells to aggregate."""


class FoldMissingClass(CellwellError):
    """A cross-validation training fold lost one of the bio-classes."""


class TooFewWells(CellwellError):
    """An operation needs more wells than were provided."""


class NonQuantileStatistic(CellwellError):
    """A closed-form uncertainty was requested for a non-quantile statistic."""


class SingularGram(CellwellError):
    """Random correlation generation failed repeatedly on singular draws."""


class ReplicationFailed(CellwellError):
    """A study replication raised; the failing replication index is reported."""
