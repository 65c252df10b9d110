"""Exception types shared across the toolkit."""


class EmgMexError(Exception):
    """Base class for all toolkit errors."""


class FormatError(EmgMexError):
    """A file does not conform to the expected on-disk format."""


class ValidationError(EmgMexError):
    """Data violates a structural invariant (NaN sample, bad bounds, ...)."""


class DomainError(EmgMexError):
    """An argument is outside the domain an operation is defined on."""


class CalibrationError(EmgMexError):
    """MVC calibration is unusable for a channel (missing or zero trials)."""
