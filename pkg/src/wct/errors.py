"""Exception types shared across the package."""


class WctError(Exception):
    """Base class for all library errors."""


class DatasetFormatError(WctError):
    """Malformed record in a dataset file (carries the offending line number)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(WctError):
    """Structurally inconsistent dataset (e.g. ragged feature lengths)."""


class EmptyDatasetError(WctError):
    """A dataset file or dataset argument contained no examples."""


class LabelOutOfRangeError(WctError):
    """A label fell outside [0, num_classes)."""


class CapacityError(WctError):
    """A class lacks enough clean examples for the requested human set."""


class SplitError(WctError):
    """An id set is too small to split."""


class ConfigError(WctError):
    """Invalid run configuration or empty required split."""


class EmptyHistoryError(WctError):
    """A dynamics statistic was requested on an empty history."""


class EmptyInputError(WctError):
    """An operation received an empty list where values are required."""


class NumericError(WctError):
    """Non-finite values where finite ones are required."""
