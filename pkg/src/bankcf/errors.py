"""Exception hierarchy shared across the package."""


class BankcfError(Exception):
    """Base class for all package errors."""


class SchemaError(BankcfError):
    """A required column/feature is missing or has the wrong shape."""


class RowParseError(BankcfError):
    """A CSV cell could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class DuplicateRowError(BankcfError):
    """Duplicate (bank_id, report_date) key encountered."""


class LabelingError(BankcfError):
    """Failure labeling could not be applied (e.g. missing failure date)."""


class SplitError(BankcfError):
    """Temporal/holdout split is impossible for the given table."""


class BalancingError(BankcfError):
    """A balancing strategy received a single-label or otherwise unusable input."""


class ParameterError(BankcfError):
    """An operation parameter is out of its valid range."""


class UnsupportedFeatureError(BankcfError):
    """Operation does not support this feature kind (e.g. SMOTE on categoricals)."""


class TrainingError(BankcfError):
    """Model fitting failed (empty data, degenerate weights, ...)."""


class ShapeError(BankcfError):
    """Input vector arity does not match the expected feature count."""


class InputError(BankcfError):
    """Non-finite or otherwise invalid input values."""


class TransportError(BankcfError):
    """HTTP transport failure after exhausting retries; safe to retry later."""


class ConfigError(BankcfError):
    """Run configuration is invalid or incomplete."""


class ReportError(BankcfError):
    """Report emission failed (unwritable directory, incomplete bundle)."""
