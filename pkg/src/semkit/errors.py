"""Typed errors raised across the toolkit.

Every failure mode surfaces as a ToolkitError subclass so callers (and the
CLI) can report a stable machine-readable kind instead of a traceback.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# --- file format errors -----------------------------------------------------

class FormatError(ToolkitError):
    """A file does not follow its declared binary or text layout."""

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MagicMismatch(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class TrailingData(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class DuplicateId(ToolkitError):
    pass


class ParseError(ToolkitError):
    def __init__(self, message: str, *, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingField(ParseError):
    pass


class IoFailure(ToolkitError):
    pass


# --- numeric / semantic errors ----------------------------------------------

class EmptyMatrix(ToolkitError):
    pass


class ZeroNormVector(ToolkitError):
    pass


class MissingEmbedding(ToolkitError):
    def __init__(self, key: str):
        super().__init__(f"embedding record not found: {key!r}")
        self.key = key


class DistanceOutOfRange(ToolkitError):
    pass


class MissingNewAnswer(ToolkitError):
    def __init__(self, item_ids: list[str]):
        super().__init__(
            "items lack a post-tune answer: " + ", ".join(repr(i) for i in item_ids)
        )
        self.item_ids = list(item_ids)


class InvalidBinWidth(ToolkitError):
    pass


class EmptySet(ToolkitError):
    pass


class InvalidConfig(ToolkitError):
    pass


class LengthMismatch(ToolkitError):
    pass


# --- matrix analysis errors -------------------------------------------------

class RankOutOfRange(ToolkitError):
    pass


class ConvergenceFailure(ToolkitError):
    pass


class NonOrthonormalFactor(ToolkitError):
    pass


class ShapeMismatch(ToolkitError):
    pass


class DegenerateData(ToolkitError):
    pass
