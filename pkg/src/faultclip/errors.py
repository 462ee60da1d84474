"""Exception hierarchy.

Configuration problems (bad thresholds, bad rates, malformed run configs)
raise :class:`ConfigError`; problems with input data or containers raise
:class:`DataError` subclasses.  The CLI maps these onto exit codes 2 and 3.
"""


class FaultClipError(Exception):
    """Base class for all package errors."""


class ConfigError(FaultClipError):
    """Invalid configuration value or inconsistent request."""


class DimensionError(FaultClipError):
    """Tensor shapes incompatible with the requested operation.

    The message names the offending axes; ``axes`` carries them
    programmatically when known.
    """

    def __init__(self, message: str, axes: tuple = ()):
        super().__init__(message)
        self.axes = axes


class DataError(FaultClipError):
    """Problem with external input data (files, records, splits)."""


class FormatError(DataError):
    """Malformed container or dataset file."""


class BadMagicError(FormatError):
    """Model container does not start with the expected magic bytes."""


class VersionError(FormatError):
    """Model container declares an unsupported format version."""


class TruncatedError(FormatError):
    """Model container or record ends before its declared payload."""


class InconsistentShapeError(FormatError):
    """Declared tensor shape disagrees with the stored word count."""


class CorruptRecordError(FormatError):
    """A dataset record carries an impossible value (e.g. label out of range)."""


class MaskIndexError(FaultClipError):
    """A fault mask addresses a word or bit outside the target model."""
