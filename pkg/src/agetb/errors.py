"""Exception hierarchy.

Every error raised for a bad model input derives from :class:`ModelError`,
which the CLI maps to exit code 1.
"""


class ModelError(ValueError):
    """Base class for domain errors."""


class DegenerateMixing(ModelError):
    pass


class InvalidState(ModelError):
    pass


class UnknownPreset(ModelError):
    pass


class StepTooLarge(ModelError):
    pass


class NonFiniteState(ModelError):
    pass


class SpanTooShort(ModelError):
    pass


class DegenerateParams(ModelError):
    pass


class NoConvergence(ModelError):
    pass


class DegenerateSeries(ModelError):
    pass


class DataGap(ModelError):
    pass


class RankDegenerate(ModelError):
    pass


class TooManyFailures(ModelError):
    pass


class InvalidOverride(ModelError):
    pass


class HorizonTooShort(ModelError):
    pass


class EmptyCluster(ModelError):
    pass


class ParseError(ModelError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConsistencyError(ModelError):
    pass


class UnknownKey(ModelError):
    pass


class MissingKey(ModelError):
    pass


class DomainError(ModelError):
    pass
