"""Exception hierarchy.

Every error carries the process exit code the command-line front end uses:
1 for I/O and environment failures, 2 for validation and domain errors.
"""


class PoseRecError(Exception):
    exit_code = 2


class ValidationError(PoseRecError, ValueError):
    exit_code = 2


class IoError(PoseRecError, OSError):
    exit_code = 1


# imaging
class ImageNotFound(IoError, FileNotFoundError):
    pass


class UnsupportedFormat(IoError):
    pass


class CorruptImage(IoError):
    pass


class GridTooFine(ValidationError):
    pass


# histogram / metrics
class InvalidBinCount(ValidationError):
    pass


class IncompatibleFeatures(ValidationError):
    pass


class MixedMetrics(ValidationError):
    pass


# index
class EmptyDataset(ValidationError):
    pass


class VersionMismatch(IoError):
    pass


class CorruptIndex(IoError):
    pass


# gan
class WrongCardinality(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NonFiniteLoss(PoseRecError, ArithmeticError):
    exit_code = 2


class CorruptModel(IoError):
    pass
