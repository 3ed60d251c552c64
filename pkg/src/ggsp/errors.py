"""Exception hierarchy.

Everything raised on purpose by the package derives from ``GGSPError``.
``ConfigError`` and ``DataError`` separate the two failure classes the CLI
maps to distinct exit codes.
"""


class GGSPError(Exception):
    pass


class ConfigError(GGSPError, ValueError):
    pass


class DataError(GGSPError, ValueError):
    pass


# graph construction
class IndexOutOfRange(DataError):
    pass


class DuplicateEdge(DataError):
    pass


class NonpositiveWeight(DataError):
    pass


class SelfLoop(DataError):
    pass


class InvalidSpec(ConfigError):
    pass


class ConnectivityTimeout(GGSPError, RuntimeError):
    pass


class TooFewPoints(DataError):
    pass


class DuplicatePoints(DataError):
    pass


class ZeroVarianceRow(DataError):
    pass


class TooFewSamples(DataError):
    pass


# spectral / model
class NotSymmetric(DataError):
    pass


class InvalidSize(ConfigError):
    pass


class DimensionMismatch(DataError):
    pass


class NegativePsd(DataError):
    pass


# filtering
class InvalidTruncation(ConfigError):
    pass


class PsdStructureViolation(DataError):
    pass


class SingularObservationGram(DataError):
    pass


# estimation
class EmptySampleSet(DataError):
    pass


class MissingValues(DataError):
    pass


class EmptyPlan(DataError):
    pass


class NonFiniteInput(DataError):
    pass


# ingestion / metrics
class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InconsistentDimensions(DataError):
    pass


class ZeroSignal(DataError):
    pass
