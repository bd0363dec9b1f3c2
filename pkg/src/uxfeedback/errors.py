"""Exception and warning types shared across the pipeline."""

from __future__ import annotations


class UXFeedbackError(Exception):
    """Base class for all errors raised by this package."""


# --- corpus -----------------------------------------------------------------

class SchemaError(UXFeedbackError):
    """A record in an input file does not match the expected schema."""

    def __init__(self, line: int, field: str, message: str = ""):
        self.line = line
        self.field = field
        detail = f": {message}" if message else ""
        super().__init__(f"line {line}: bad or missing field {field!r}{detail}")


class DuplicateIdError(UXFeedbackError):
    def __init__(self, comment_id: str):
        self.comment_id = comment_id
        super().__init__(f"duplicate comment id {comment_id!r}")


class UnknownCommentError(UXFeedbackError):
    def __init__(self, comment_id: str):
        self.comment_id = comment_id
        super().__init__(f"unknown comment id {comment_id!r}")


class UnknownLabelError(UXFeedbackError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"label {label!r} is not in the taxonomy")


class EmptyCorpusError(UXFeedbackError):
    """Operation requires a corpus with at least one comment."""


# --- textprep ---------------------------------------------------------------

class EmptyTokenError(UXFeedbackError):
    """Cannot embed an empty token."""


class DimensionMismatchError(UXFeedbackError):
    """Vector length does not match the expected dimension."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class VectorParseError(UXFeedbackError):
    """A row of a text vector file could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# --- boost / multilabel -----------------------------------------------------

class InvalidParamsError(UXFeedbackError):
    """A training hyperparameter is outside its allowed range."""


class NotRecordedError(UXFeedbackError):
    """The model was trained without loss recording enabled."""


class DegenerateDataWarning(UserWarning):
    """Training data cannot support the requested fit (e.g. one class only)."""


class InvalidKError(UXFeedbackError):
    """Fold count k is not usable for the given number of examples."""


class LengthMismatchError(UXFeedbackError):
    """Paired sequences have different lengths."""


class FingerprintMismatchError(UXFeedbackError):
    """A model was trained against a different embedding configuration."""


class ModelFormatError(UXFeedbackError):
    """A persisted model file has an unknown version or a bad layout."""


# --- stats ------------------------------------------------------------------

class OutOfRangeError(UXFeedbackError):
    """A rating or score is outside its declared range."""


class AllMissingError(UXFeedbackError):
    """Every item of a multi-item score is missing."""


class UnknownCategoryError(UXFeedbackError):
    def __init__(self, category: str):
        self.category = category
        super().__init__(f"category {category!r} is not in the declared domain")


class DegenerateTableError(UXFeedbackError):
    """Contingency table has no testable structure (empty or < 2x2)."""


class ZeroMarginWarning(UserWarning):
    """An all-zero row or column was dropped before testing."""


class EmptyConditionError(UXFeedbackError):
    """Conditioning row has a zero total."""


class OverlappingSetsError(UXFeedbackError):
    """Column sets for a probability difference must be disjoint."""


class InvalidCountsError(UXFeedbackError):
    """Successes/trials pair is not a valid binomial observation."""


class TooFewReplicatesWarning(UserWarning):
    """Bootstrap replicate count is below the recommended minimum."""


class EmptyGroupWarning(UserWarning):
    """A score group has no observations; its curve is omitted."""


# --- summarize --------------------------------------------------------------

class NotEligibleError(UXFeedbackError):
    """Comment set does not meet the summarization thresholds."""


class EndpointTimeoutError(UXFeedbackError):
    """The text-generation endpoint did not answer within the retry budget."""


class EndpointError(UXFeedbackError):
    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(f"endpoint returned status {status}" + (f": {message}" if message else ""))


class ResponseSchemaError(UXFeedbackError):
    """The endpoint response does not match the expected JSON schema."""


class InsufficientSupportedError(UXFeedbackError):
    """Not enough validated citations to fill the requested snippet count."""


# --- config / cli -----------------------------------------------------------

class ConfigError(UXFeedbackError):
    """Pipeline configuration file is malformed or contains unknown keys."""
