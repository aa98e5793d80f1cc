"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class AlmanacError(Exception):
    """Base class for all almanac failures."""


class ConfigError(AlmanacError):
    """Invalid configuration value; message names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CorpusIOError(AlmanacError):
    """A corpus or store directory is missing, unreadable, or unwritable."""


class NotFoundError(AlmanacError):
    """Unknown entity, metric, or year."""


class MissingDataError(AlmanacError):
    """A required cell is missing or unusable (suppressed/missing status)."""


class UndefinedRatioError(AlmanacError):
    """Ratio denominator is zero."""


class DegenerateScaleError(AlmanacError):
    """Robust scale is zero; a modified z-score is undefined."""


class UndefinedCorrelationError(AlmanacError):
    """Correlation undefined (constant input)."""


class InsufficientPoolError(AlmanacError):
    """Standardization pool smaller than two vectors."""


class IneligibleDistrictError(AlmanacError):
    """District cannot be matched or bundled; message carries the reason."""

    def __init__(self, district_id: str, reason: str):
        self.district_id = district_id
        self.reason = reason
        super().__init__(f"{district_id}: {reason}")


class DanglingReferenceError(AlmanacError):
    """A structural reference points at a missing entity (fatal post-ingest)."""


class SchemaVersionError(AlmanacError):
    """Bundle or store schema version not supported."""


class BundleParseError(AlmanacError):
    """Malformed bundle file; carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")
