"""Exception hierarchy shared by every qrsr module."""


class QrsrError(Exception):
    """Base class for all errors raised by qrsr."""


class InvalidConfig(QrsrError, ValueError):
    """A configuration value is outside the supported range."""


class CapacityExceeded(QrsrError, ValueError):
    """The payload does not fit in the configured symbol."""


class ExtentMismatch(QrsrError, ValueError):
    """Image and code geometry disagree."""


class DecodeError(QrsrError):
    """The symbol could not be read. For SSR purposes this means unscannable."""


class FormatInfoUnreadable(DecodeError):
    """Neither copy of the format information is within BCH distance."""


class RsUncorrectable(DecodeError):
    """A Reed-Solomon block carries more errors than it can correct."""


class NoFreeBits(QrsrError):
    """The payload leaves no padding bits to re-select."""


class DegenerateProjection(QrsrError, ValueError):
    """The requested tilt cannot be projected (angle >= 90 degrees)."""
