"""Exception hierarchy. Every error carries a stable ``code`` string."""

from __future__ import annotations


class PeerGradeError(ValueError):
    code = "ERROR"

    def __init__(self, message: str = "") -> None:
        super().__init__(message or self.code)


class EmptySampleError(PeerGradeError):
    code = "EMPTY_SAMPLE"


class InvalidGradeError(PeerGradeError):
    code = "INVALID_GRADE"


class ZeroObservationError(PeerGradeError):
    code = "ZERO_OBSERVATION"


class LengthMismatchError(PeerGradeError):
    code = "LENGTH_MISMATCH"


class InvalidWeightError(PeerGradeError):
    code = "INVALID_WEIGHT"


class AllZeroWeightsError(PeerGradeError):
    code = "ALL_ZERO_WEIGHTS"


class InvalidRecordError(PeerGradeError):
    code = "INVALID_RECORD"


class EmptyGradersError(PeerGradeError):
    code = "EMPTY_GRADERS"


class InvalidConfigError(PeerGradeError):
    code = "INVALID_CONFIG"


class ConstantVectorError(PeerGradeError):
    code = "CONSTANT_VECTOR"


class TooFewValuesError(PeerGradeError):
    code = "TOO_FEW_VALUES"


class InvalidRubricError(PeerGradeError):
    code = "INVALID_RUBRIC"


class MalformedHeaderError(PeerGradeError):
    code = "MALFORMED_HEADER"


class InvalidKError(PeerGradeError):
    code = "INVALID_K"
