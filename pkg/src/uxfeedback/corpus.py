"""Comment/response data model, JSONL+CSV ingestion, and corpus-level stats.

A corpus is an immutable snapshot: every mutating operation returns a new
Corpus, so snapshots can be shared freely across threads for analysis.
Persistence is plain JSONL (one record per line) with an in-memory id index.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateIdError,
    EmptyCorpusError,
    SchemaError,
    UnknownCommentError,
    UnknownLabelError,
)
from .util import format_rfc3339, parse_rfc3339, percent_share


class Sentiment(Enum):
    POSITIVE = "positive"
    MIXED = "mixed"
    NEGATIVE = "negative"

    @property
    def display(self) -> str:
        return self.value.capitalize()


class LabelSource(Enum):
    HUMAN = "human"
    MODEL = "model"
    UNLABELED = "unlabeled"


class SurveyKind(Enum):
    TUTORIAL = "tutorial"
    APP = "app"


@dataclass(frozen=True)
class TopicLabel:
    name: str
    definition: str = ""


@dataclass(frozen=True)
class TopicTaxonomy:
    """Codebook of topic labels; version bumps on every mutation."""

    labels: tuple[TopicLabel, ...]
    version: int = 1

    def __post_init__(self) -> None:
        names = [lab.name for lab in self.labels]
        if any(not n for n in names):
            raise ValueError("taxonomy label names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("taxonomy label names must be unique")
        if self.version < 1:
            raise ValueError("taxonomy version must be >= 1")

    @property
    def label_names(self) -> tuple[str, ...]:
        return tuple(lab.name for lab in self.labels)

    @property
    def name_set(self) -> frozenset[str]:
        return frozenset(lab.name for lab in self.labels)

    def with_label(self, name: str, definition: str = "") -> "TopicTaxonomy":
        return TopicTaxonomy(self.labels + (TopicLabel(name, definition),), self.version + 1)


def default_taxonomy() -> TopicTaxonomy:
    """The ten-label codebook used when a config does not supply its own."""
    return TopicTaxonomy(
        labels=(
            TopicLabel("Usability", "Ease of use, navigation, workflow friction"),
            TopicLabel("Functionality", "Feature requests and behaviour of product capabilities"),
            TopicLabel("Error", "Bugs, crashes, technical failures reported by the user"),
            TopicLabel("Other", "Residual topics that fit no other label"),
            TopicLabel("Performance", "Speed, latency, responsiveness complaints or praise"),
            TopicLabel("General Feedback", "Broad impressions without a specific aspect"),
            TopicLabel("Help", "Documentation, tutorials, onboarding, support content"),
            TopicLabel("Visual Design", "Look and feel, layout, styling"),
            TopicLabel("Integration", "Interoperability with other products or systems"),
            TopicLabel("Licensing", "Pricing, entitlements, license management"),
        ),
    )


@dataclass(frozen=True)
class Comment:
    id: str
    product_id: str
    timestamp: datetime
    text: str
    language: str = "unknown"
    translated_text: str | None = None
    sentiment: Sentiment | None = None
    labels: frozenset[str] = frozenset()
    label_source: LabelSource = LabelSource.UNLABELED

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("comment id must be non-empty")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))
        if not isinstance(self.labels, frozenset):
            object.__setattr__(self, "labels", frozenset(self.labels))
        if self.label_source is LabelSource.UNLABELED and self.labels:
            raise ValueError(f"comment {self.id}: unlabeled comments cannot carry labels")

    @property
    def classification_text(self) -> str:
        """Text used for labeling: the translation when one exists."""
        return self.translated_text if self.translated_text else self.text


@dataclass(frozen=True)
class SurveyResponse:
    respondent_id: str
    product_id: str
    timestamp: datetime
    survey_kind: SurveyKind
    answers: Mapping[str, int]
    comment_id: str | None = None

    def __post_init__(self) -> None:
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))
        lo, hi = (0, 10) if self.survey_kind is SurveyKind.TUTORIAL else (1, 5)
        for key, value in self.answers.items():
            if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
                raise ValueError(
                    f"respondent {self.respondent_id}: answer {key}={value!r} outside [{lo},{hi}]"
                )
        object.__setattr__(self, "answers", dict(self.answers))


@dataclass(frozen=True)
class Correction:
    """A human coder's replacement label set for one comment."""

    comment_id: str
    labels: frozenset[str]

    def __post_init__(self) -> None:
        if not isinstance(self.labels, frozenset):
            object.__setattr__(self, "labels", frozenset(self.labels))


@dataclass(frozen=True)
class Corpus:
    comments: tuple[Comment, ...] = ()
    responses: tuple[SurveyResponse, ...] = ()
    taxonomy: TopicTaxonomy = field(default_factory=default_taxonomy)

    def __post_init__(self) -> None:
        if not isinstance(self.comments, tuple):
            object.__setattr__(self, "comments", tuple(self.comments))
        if not isinstance(self.responses, tuple):
            object.__setattr__(self, "responses", tuple(self.responses))
        index: dict[str, Comment] = {}
        known = self.taxonomy.name_set
        for comment in self.comments:
            if comment.id in index:
                raise DuplicateIdError(comment.id)
            unknown = comment.labels - known
            if unknown:
                raise UnknownLabelError(sorted(unknown)[0])
            index[comment.id] = comment
        for response in self.responses:
            if response.comment_id is not None and response.comment_id not in index:
                raise UnknownCommentError(response.comment_id)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.comments)

    def get(self, comment_id: str) -> Comment | None:
        return self._index.get(comment_id)  # type: ignore[attr-defined]

    def require(self, comment_id: str) -> Comment:
        comment = self.get(comment_id)
        if comment is None:
            raise UnknownCommentError(comment_id)
        return comment

    @property
    def product_ids(self) -> tuple[str, ...]:
        return tuple(sorted({c.product_id for c in self.comments}))

    # --- descriptive statistics ---------------------------------------------

    def label_shares(self) -> dict[str, "LabelShare"]:
        """Per-label comment count and share of all comments, sorted by count.

        Shares are percentages of the comment total; multi-label comments
        make them sum above 100%.
        """
        if not self.comments:
            raise EmptyCorpusError("label_shares needs a non-empty corpus")
        counts = {name: 0 for name in self.taxonomy.label_names}
        for comment in self.comments:
            for label in comment.labels:
                counts[label] += 1
        order = sorted(
            self.taxonomy.label_names,
            key=lambda name: (-counts[name], self.taxonomy.label_names.index(name)),
        )
        total = len(self.comments)
        return {
            name: LabelShare(count=counts[name], share_pct=percent_share(counts[name], total))
            for name in order
        }

    def multi_label_share(self) -> float:
        """Fraction of comments carrying two or more labels."""
        if not self.comments:
            raise EmptyCorpusError("multi_label_share needs a non-empty corpus")
        multi = sum(1 for c in self.comments if len(c.labels) >= 2)
        return multi / len(self.comments)

    # --- snapshot transforms --------------------------------------------------

    def filter(
        self,
        product: str | None = None,
        period: tuple[datetime, datetime] | None = None,
        labels: Iterable[str] | None = None,
        sentiment: Sentiment | None = None,
    ) -> "Corpus":
        """Sub-corpus of matching comments; the label filter matches when a
        comment carries ANY of the requested labels. Periods are half-open
        [start, end) in UTC. Responses are kept when their product/period
        match and their comment reference (if any) still resolves.
        """
        wanted = frozenset(labels) if labels is not None else None

        def keep(comment: Comment) -> bool:
            if product is not None and comment.product_id != product:
                return False
            if period is not None and not (period[0] <= comment.timestamp < period[1]):
                return False
            if wanted is not None and not (comment.labels & wanted):
                return False
            if sentiment is not None and comment.sentiment is not sentiment:
                return False
            return True

        kept_comments = tuple(c for c in self.comments if keep(c))
        kept_ids = {c.id for c in kept_comments}

        def keep_response(response: SurveyResponse) -> bool:
            if product is not None and response.product_id != product:
                return False
            if period is not None and not (period[0] <= response.timestamp < period[1]):
                return False
            return response.comment_id is None or response.comment_id in kept_ids

        kept_responses = tuple(r for r in self.responses if keep_response(r))
        return Corpus(kept_comments, kept_responses, self.taxonomy)

    def merge_corrections(
        self,
        corrections: Sequence[Correction],
        audit_path: str | Path | None = None,
        at: datetime | None = None,
    ) -> "Corpus":
        """Apply human label corrections, returning the new training pool.

        Corrected comments get label_source=human. Every applied correction is
        appended to the audit log (old labels, new labels, time) when a path
        is given.
        """
        known = self.taxonomy.name_set
        by_id = dict(self._index)  # type: ignore[attr-defined]
        audit_rows = []
        stamp = format_rfc3339(at if at is not None else datetime.now(timezone.utc))
        for correction in corrections:
            old = by_id.get(correction.comment_id)
            if old is None:
                raise UnknownCommentError(correction.comment_id)
            unknown = correction.labels - known
            if unknown:
                raise UnknownLabelError(sorted(unknown)[0])
            new = replace(old, labels=correction.labels, label_source=LabelSource.HUMAN)
            by_id[correction.comment_id] = new
            audit_rows.append(
                {
                    "comment_id": correction.comment_id,
                    "old_labels": sorted(old.labels),
                    "new_labels": sorted(correction.labels),
                    "old_source": old.label_source.value,
                    "at": stamp,
                }
            )
        if audit_path is not None and audit_rows:
            with open(audit_path, "a", encoding="utf-8") as fh:
                for row in audit_rows:
                    fh.write(json.dumps(row, sort_keys=True) + "\n")
        new_comments = tuple(by_id[c.id] for c in self.comments)
        return Corpus(new_comments, self.responses, self.taxonomy)


@dataclass(frozen=True)
class LabelShare:
    count: int
    share_pct: float


# --- serialization ------------------------------------------------------------

_COMMENT_KEYS = ("id", "product_id", "timestamp", "text", "language",
                 "translated_text", "sentiment", "labels", "label_source")
_RESPONSE_KEYS = ("respondent_id", "product_id", "timestamp", "survey_kind",
                  "answers", "comment_id")


def _comment_from_record(record: dict, line: int) -> Comment:
    for key in ("id", "product_id", "timestamp", "text"):
        if key not in record or record[key] is None:
            raise SchemaError(line, key)
    unknown = set(record) - set(_COMMENT_KEYS)
    if unknown:
        raise SchemaError(line, sorted(unknown)[0], "unexpected field")
    try:
        timestamp = parse_rfc3339(str(record["timestamp"]))
    except ValueError as exc:
        raise SchemaError(line, "timestamp", str(exc)) from None
    sentiment_raw = record.get("sentiment")
    try:
        sentiment = Sentiment(sentiment_raw) if sentiment_raw else None
    except ValueError:
        raise SchemaError(line, "sentiment", f"unknown value {sentiment_raw!r}") from None
    labels_raw = record.get("labels") or []
    if not isinstance(labels_raw, (list, tuple)):
        raise SchemaError(line, "labels", "expected an array")
    source_raw = record.get("label_source") or ("unlabeled" if not labels_raw else "model")
    try:
        source = LabelSource(source_raw)
    except ValueError:
        raise SchemaError(line, "label_source", f"unknown value {source_raw!r}") from None
    try:
        return Comment(
            id=str(record["id"]),
            product_id=str(record["product_id"]),
            timestamp=timestamp,
            text=str(record["text"]),
            language=str(record.get("language") or "unknown"),
            translated_text=record.get("translated_text") or None,
            sentiment=sentiment,
            labels=frozenset(str(x) for x in labels_raw),
            label_source=source,
        )
    except ValueError as exc:
        raise SchemaError(line, "labels", str(exc)) from None


def _response_from_record(record: dict, line: int) -> SurveyResponse:
    for key in ("respondent_id", "product_id", "timestamp", "survey_kind", "answers"):
        if key not in record or record[key] is None:
            raise SchemaError(line, key)
    unknown = set(record) - set(_RESPONSE_KEYS)
    if unknown:
        raise SchemaError(line, sorted(unknown)[0], "unexpected field")
    try:
        kind = SurveyKind(record["survey_kind"])
    except ValueError:
        raise SchemaError(line, "survey_kind", f"unknown value {record['survey_kind']!r}") from None
    answers = record["answers"]
    if isinstance(answers, str):
        try:
            answers = json.loads(answers)
        except json.JSONDecodeError:
            raise SchemaError(line, "answers", "not valid JSON") from None
    if not isinstance(answers, dict):
        raise SchemaError(line, "answers", "expected an object")
    try:
        timestamp = parse_rfc3339(str(record["timestamp"]))
    except ValueError as exc:
        raise SchemaError(line, "timestamp", str(exc)) from None
    try:
        return SurveyResponse(
            respondent_id=str(record["respondent_id"]),
            product_id=str(record["product_id"]),
            timestamp=timestamp,
            survey_kind=kind,
            answers={str(k): v for k, v in answers.items()},
            comment_id=record.get("comment_id") or None,
        )
    except ValueError as exc:
        raise SchemaError(line, "answers", str(exc)) from None


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, "<json>", exc.msg) from None
            if not isinstance(record, dict):
                raise SchemaError(line_no, "<json>", "expected an object per line")
            yield line_no, record


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for line_no, row in enumerate(reader, start=2):  # header is line 1
            record = {k: v for k, v in row.items() if v not in (None, "")}
            if "labels" in record:
                record["labels"] = [x for x in record["labels"].split("|") if x]
            yield line_no, record


def ingest(
    comments_path: str | Path,
    format: str = "jsonl",
    responses_path: str | Path | None = None,
    taxonomy: TopicTaxonomy | None = None,
) -> Corpus:
    """Load a corpus from disk; rejects duplicate ids and malformed rows
    (SchemaError carries the offending line number)."""
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown format {format!r}")
    reader = _iter_jsonl if format == "jsonl" else _iter_csv
    comments: list[Comment] = []
    seen: set[str] = set()
    for line_no, record in reader(Path(comments_path)):
        comment = _comment_from_record(record, line_no)
        if comment.id in seen:
            raise DuplicateIdError(comment.id)
        seen.add(comment.id)
        comments.append(comment)
    responses: list[SurveyResponse] = []
    if responses_path is not None:
        for line_no, record in reader(Path(responses_path)):
            responses.append(_response_from_record(record, line_no))
    return Corpus(tuple(comments), tuple(responses), taxonomy or default_taxonomy())


def comment_to_record(comment: Comment) -> dict:
    return {
        "id": comment.id,
        "product_id": comment.product_id,
        "timestamp": format_rfc3339(comment.timestamp),
        "text": comment.text,
        "language": comment.language,
        "translated_text": comment.translated_text,
        "sentiment": comment.sentiment.value if comment.sentiment else None,
        "labels": sorted(comment.labels),
        "label_source": comment.label_source.value,
    }


def response_to_record(response: SurveyResponse) -> dict:
    return {
        "respondent_id": response.respondent_id,
        "product_id": response.product_id,
        "timestamp": format_rfc3339(response.timestamp),
        "survey_kind": response.survey_kind.value,
        "answers": dict(sorted(response.answers.items())),
        "comment_id": response.comment_id,
    }


def export(
    corpus: Corpus,
    comments_path: str | Path,
    responses_path: str | Path | None = None,
) -> None:
    """Write the corpus back to JSONL; ingest(export(c)) round-trips."""
    with open(comments_path, "w", encoding="utf-8") as fh:
        for comment in corpus.comments:
            fh.write(json.dumps(comment_to_record(comment), sort_keys=True, ensure_ascii=False) + "\n")
    if responses_path is not None:
        with open(responses_path, "w", encoding="utf-8") as fh:
            for response in corpus.responses:
                fh.write(json.dumps(response_to_record(response), sort_keys=True, ensure_ascii=False) + "\n")
