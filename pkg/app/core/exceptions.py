"""
Exception hierarchy.

Every error raised on purpose by the runtime derives from RRMError and carries
the process exit status the CLI should use for it.
"""
from typing import Sequence


class RRMError(Exception):
    """Base class for runtime errors"""

    exit_code: int = 1


class UsageError(RRMError):
    """Invalid arguments, empty inputs, or an operation called out of order"""

    exit_code = 1


class ShapeMismatchError(RRMError, ValueError):
    """Two shapes that must agree do not"""

    exit_code = 1

    def __init__(self, what: str, expected: Sequence[int], actual: Sequence[int]):
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{what}: expected shape {self.expected}, got {self.actual}")


class DataFormatError(RRMError):
    """Malformed model or frame file"""

    exit_code = 2


class BadMagicError(DataFormatError):
    pass


class UnsupportedVersionError(DataFormatError):
    pass


class TruncatedDataError(DataFormatError):
    pass


class TrailingBytesError(DataFormatError):
    pass


class UnknownLayerKindError(DataFormatError):
    pass


class LayerChainError(DataFormatError):
    """Layer specs do not chain from the declared input shape"""


class NumericError(RRMError):
    """NaN or Inf produced by a computation"""

    exit_code = 3


class ZeroWorkloadError(RRMError):
    """Speedup ratio requested with an all-zero denominator"""

    exit_code = 3
