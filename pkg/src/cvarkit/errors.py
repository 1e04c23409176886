"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs or specifications and
``NumericalError`` for fits that break down. The CLI maps them to exit codes
2 and 3.
"""


class CvarkitError(Exception):
    """Base class for all package errors."""


class ValidationError(CvarkitError, ValueError):
    pass


class NumericalError(CvarkitError, ArithmeticError):
    pass


# panel ingestion
class MissingColumn(ValidationError):
    pass


class NonNumericCell(ValidationError):
    pass


class DuplicateTimestamp(ValidationError):
    pass


class UnassignedColumn(ValidationError):
    pass


class InvalidRoles(ValidationError):
    pass


class TooShort(ValidationError):
    pass


# estimation
class SingularRegressorMatrix(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SingularMomentMatrix(NumericalError):
    pass


class RankOutOfBounds(ValidationError):
    pass


class GrangerConditionViolated(NumericalError):
    pass


# control-VAR
class ConstantPolicy(ValidationError):
    pass


class NoTreatedPeriods(ValidationError):
    pass


# estimands
class DegenerateSample(ValidationError):
    pass


class InfiniteVariance(ValidationError):
    pass


class NoPositiveMass(ValidationError):
    pass


class SpecTheoremMismatch(ValidationError):
    pass


# inference
class TooFewObservations(ValidationError):
    pass


class BootstrapDegenerate(NumericalError):
    pass
