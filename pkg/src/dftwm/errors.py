"""Exception hierarchy shared by every dftwm module."""


class WatermarkError(Exception):
    """Base class for all dftwm errors."""


class UnsupportedFormat(WatermarkError):
    pass


class NotGrayscale(WatermarkError):
    pass


class NonFiniteValue(WatermarkError, ValueError):
    pass


class DimensionNotMultipleOf8(WatermarkError, ValueError):
    pass


class DimensionMismatch(WatermarkError, ValueError):
    pass


class InvalidMask(WatermarkError, ValueError):
    pass


class LengthTooSmall(WatermarkError, ValueError):
    pass


class DegenerateInput(WatermarkError, ValueError):
    """A correlation input has zero variance."""


class DegenerateReference(WatermarkError, ValueError):
    """The reference watermark of an NC computation is all zero."""


class PayloadTooLarge(WatermarkError, ValueError):
    pass


class Unsatisfiable(WatermarkError):
    """No gain meets the requested calibration constraints."""


class InvalidSpec(WatermarkError, ValueError):
    """Malformed or out-of-range attack specification."""


class CodecFailure(WatermarkError):
    pass


class FixtureError(WatermarkError):
    pass
