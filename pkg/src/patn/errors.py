"""Exception types shared across the package.

Callers that need to distinguish failure classes (the CLI maps them to
exit codes) catch these instead of bare ValueError.
"""


class PatnError(Exception):
    """Base class for all package errors."""


class IngestionError(PatnError):
    """A dataset file or directory could not be read or parsed."""


class SchemaError(PatnError):
    """A file parsed but its layout does not match the expected schema."""


class ConfigurationError(PatnError):
    """An invalid parameter combination was supplied."""


class StatisticsError(PatnError):
    """Statistics were requested over degenerate or invalid input."""


class ShapeError(PatnError):
    """Array shapes do not conform to the operation's contract."""


class TrainingError(PatnError):
    """Training cannot proceed or diverged (single-class data, NaN loss)."""


class CapabilityError(PatnError):
    """The handle does not support the requested operation."""


class MetricError(PatnError):
    """A metric is undefined on the given inputs."""


class ChecksumError(SchemaError):
    """A serialized bundle's integrity check failed."""
