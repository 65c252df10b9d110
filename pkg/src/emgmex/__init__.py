"""Facial-EMG micro-expression quantification toolkit."""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    DomainError,
    EmgMexError,
    FormatError,
    ValidationError,
)
from .model import (
    ChannelTrace,
    DetectionInterval,
    EmgRecording,
    ExpressionAnnotation,
    SpotParams,
    classify_expression,
    load_annotations,
    load_recording,
    save_annotations,
    save_recording,
)

__all__ = [
    "__version__",
    "CalibrationError",
    "DomainError",
    "EmgMexError",
    "FormatError",
    "ValidationError",
    "ChannelTrace",
    "DetectionInterval",
    "EmgRecording",
    "ExpressionAnnotation",
    "SpotParams",
    "classify_expression",
    "load_annotations",
    "load_recording",
    "save_annotations",
    "save_recording",
]
