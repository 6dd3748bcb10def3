"""Exception hierarchy shared by the library and the command line.

Every error carries ``exit_code`` so the CLI can map it without a lookup table:
3 for bad input data, 4 for numerical failures.
"""


class CamidError(Exception):
    exit_code = 1


class DataError(CamidError):
    exit_code = 3


class NumericError(CamidError):
    exit_code = 4


class UnsupportedFormat(DataError):
    pass


class CorruptFile(DataError):
    pass


class ImageTooSmall(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class ShapeMismatch(DataError, ValueError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class TooManyLevels(DataError, ValueError):
    pass


class DegenerateBand(DataError):
    """Band too flat for the requested statistic (zero variance / one occupied bin)."""


class InsufficientSamples(DataError):
    pass


class DegenerateData(DataError):
    pass


class LabelOutOfRange(DataError, ValueError):
    pass


class EmptyClass(DataError):
    pass


class FeatureModelMismatch(DataError):
    pass


class NonFiniteCost(NumericError):
    pass


class GradientCheckFailed(NumericError):
    pass
