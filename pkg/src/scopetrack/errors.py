"""Exception types shared across the toolkit.

Everything derives from DataError so the CLI can map any malformed-input
condition to a single exit code.
"""

from __future__ import annotations


class DataError(ValueError):
    """Invalid or inconsistent input data."""


class MaskFormatError(DataError):
    """Run-length mask violates the codec invariants."""


class DimensionError(DataError):
    """Operands have incompatible or degenerate dimensions."""


class StreamFormatError(DataError):
    """A serialized stream file cannot be parsed."""


class FrameAlignmentError(DataError):
    """Prediction and ground-truth frames do not line up 1:1."""


class CapacityError(DataError):
    """More objects than available query slots."""


class MissingPredictionMaskError(DataError):
    """Ground truth carries a mask but the matched query slot does not."""


class UndefinedMetricError(DataError):
    """Metric denominator is empty (e.g. no ground-truth detections)."""


class InstanceTooLargeError(DataError):
    """Problem size exceeds what the brute-force oracle enumerates."""


class UnknownClassError(DataError):
    """Class label not present in the stream's class set."""
