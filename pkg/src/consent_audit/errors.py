"""Shared exception types for the audit engine."""


class AuditError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(AuditError):
    """A document does not match the expected schema.

    ``path`` names the offending field, e.g. ``events[3].kind``.
    """

    def __init__(self, path: str, message: str = "missing or malformed field"):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantError(AuditError):
    """A document is schema-valid but violates a model invariant."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DecodeError(AuditError):
    """A consent string cannot be decoded.

    ``reason`` is one of ``bad_base64``, ``truncated_bits``,
    ``unsupported_version``; ``bit_offset`` is set where applicable.
    """

    BAD_BASE64 = "bad_base64"
    TRUNCATED_BITS = "truncated_bits"
    UNSUPPORTED_VERSION = "unsupported_version"

    def __init__(self, reason: str, message: str = "", bit_offset: int | None = None):
        detail = f"{reason}: {message}" if message else reason
        if bit_offset is not None:
            detail += f" (bit offset {bit_offset})"
        super().__init__(detail)
        self.reason = reason
        self.bit_offset = bit_offset


class EncodeError(AuditError):
    """A consent record cannot be encoded (e.g. vendor id out of range)."""

    def __init__(self, reason: str, message: str = ""):
        super().__init__(f"{reason}: {message}" if message else reason)
        self.reason = reason


class ParseError(AuditError):
    """A data file (tracker list, lexicon, selector rules) failed to parse."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class SuffixError(AuditError):
    """Invalid input to public-suffix computations."""


class ConfigError(AuditError):
    """Audit configuration is invalid or references missing files."""


class PreconditionError(AuditError):
    """A checker was invoked on a session that violates its preconditions."""


class ConflictError(AuditError):
    """An operator answer targets a requirement already decided technically."""
