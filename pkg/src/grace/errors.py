"""Exception hierarchy for the grace proxy.

Every error raised by grace code derives from GraceError so callers can
distinguish "our" failures (which the proxy converts into pass-through
behavior) from programming errors.
"""

from __future__ import annotations


class GraceError(Exception):
    """Base class for all grace errors."""


# --- rule / XML loading -------------------------------------------------

class RuleError(GraceError):
    """Base class for translation-rule loading and planning errors."""


class ParseError(RuleError):
    """Malformed XML. Carries the 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(RuleError):
    """Well-formed XML that does not match the expected document schema."""


class DuplicateIdError(RuleError):
    """A catalog or profile document repeats an id that must be unique."""


class SelfLoopError(RuleError):
    """A transformation whose source and target media type are equal."""


class UnknownRuleError(RuleError):
    """A profile references a transformation id missing from the catalog."""


class AmbiguousProfileError(RuleError):
    """Two rules in one profile share the same source media type."""


class CycleError(RuleError):
    """Chain planning revisited a media type it had already produced."""

    def __init__(self, mime: str, partial_step_ids: list[str] | None = None):
        super().__init__(f"transformation rules cycle back to {mime!r}")
        self.mime = mime
        self.partial_step_ids = partial_step_ids or []


class DepthExceededError(RuleError):
    """Chain planning exceeded the configured maximum step count."""

    def __init__(self, max_depth: int, partial_step_ids: list[str] | None = None):
        super().__init__(f"transformation chain exceeds max depth {max_depth}")
        self.max_depth = max_depth
        self.partial_step_ids = partial_step_ids or []


# --- codecs -------------------------------------------------------------

class CodecError(GraceError):
    """Base class for image decode/encode failures."""


class UnsupportedFormatError(CodecError):
    """The media type has no registered native codec for this direction."""


class DecodeError(CodecError):
    """Truncated or corrupt payload. offset is the byte position where
    decoding failed, when the decoder can tell."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class EncodeError(CodecError):
    """The pixel data could not be written in the requested format."""


class PreconditionError(CodecError):
    """Encoder input violates a stated precondition (e.g. alpha not
    flattened before an opaque-only format)."""


# --- pipeline -----------------------------------------------------------

class PipelineError(GraceError):
    """Base class for chain-execution failures."""


class DuplicateTranslatorError(PipelineError):
    """A translator name was registered twice."""


class UnknownTranslatorError(PipelineError):
    """A catalog references a translator name that is not registered."""


class StepError(PipelineError):
    """One chain step failed. The caller must fall back to the original,
    untransformed body."""

    def __init__(self, step_id: str, cause: Exception):
        super().__init__(f"step {step_id!r} failed: {cause}")
        self.step_id = step_id
        self.cause = cause


# --- external conversion service -----------------------------------------

class ExternalServiceError(GraceError):
    """Base class for remote-conversion client errors."""


class RemoteError(ExternalServiceError):
    """The remote service answered with a non-200 status, or could not be
    reached at all (status is None in that case)."""

    def __init__(self, status: int | None, detail: str = ""):
        label = f"status {status}" if status is not None else "unreachable"
        super().__init__(f"remote conversion failed: {label}" + (f" ({detail})" if detail else ""))
        self.status = status


class ProtocolError(ExternalServiceError):
    """The remote service answered 200 but violated the wire contract."""


class TimeoutError(ExternalServiceError):  # noqa: A001 - scoped to grace.errors
    """The remote service did not answer within the configured timeout."""


class PayloadTooLargeError(ExternalServiceError):
    """Request body exceeds the configured maximum payload size."""


class StartupError(GraceError):
    """A server component could not bind or start."""


# --- proxy ----------------------------------------------------------------

class UpstreamError(GraceError):
    """Origin fetch failure. kind is one of: dns, connect, timeout, protocol."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"upstream-{kind}" + (f": {detail}" if detail else ""))
        self.kind = kind


# --- admin API -------------------------------------------------------------

class AdminError(GraceError):
    """Base class for profile-management request failures."""


class NotFoundError(AdminError):
    """The named profile does not exist."""


class VersionConflictError(AdminError):
    """The caller's version token no longer matches the stored profile."""

    def __init__(self, profile_id: str, current_version: int):
        super().__init__(
            f"profile {profile_id!r} is at version {current_version}"
        )
        self.profile_id = profile_id
        self.current_version = current_version


class InvalidPatchError(AdminError):
    """A patch names rules that cannot be added or removed as asked."""
