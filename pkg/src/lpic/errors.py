"""Exception types shared across the codec."""


class LpicError(Exception):
    """Base class for all codec errors."""


class CorruptStreamError(LpicError):
    """The compressed byte stream is truncated or inconsistent."""


class FingerprintMismatchError(LpicError):
    """Container was produced with different weights than the ones loaded."""


class UnsupportedImageError(LpicError):
    """Input image file has a depth/colorspace the codec does not accept."""
