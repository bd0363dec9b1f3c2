"""Category-grouped summary generation with strict citation discipline.

A summary draft is a list of per-category attributes, each backed by one or
more citations (comment id + verbatim extract). Drafts come either from an
external text-generation HTTP endpoint or from a deterministic offline
extractive fallback (the comment closest to its category centroid, cited as
itself). Validation checks every citation against the source corpus;
publication requires a clean report.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import requests

from .corpus import Comment, Corpus, Sentiment
from .errors import (
    EndpointError,
    EndpointTimeoutError,
    InsufficientSupportedError,
    NotEligibleError,
    ResponseSchemaError,
)
from .textprep import DEFAULT_PREPROCESS, EmbeddingModel, PreprocessConfig, embed_comment


@dataclass(frozen=True)
class SummaryConfig:
    min_total_comments: int = 20
    min_category_comments: int = 4
    volume_floor_fraction: float = 0.02  # scales the category floor on busy products
    max_categories: int = 4
    include_small_categories: frozenset[str] = frozenset()
    snippet_count: int = 5
    per_attribute_min_support: int = 1
    balance_tolerance: int = 1
    endpoint: str | None = None
    timeout_s: float = 30.0
    retries: int = 2
    max_tokens: int = 1024
    temperature: float = 0.0
    seed: int = 42
    fallback_to_offline: bool = False
    low_volume_band: tuple[int, int] = (20, 50)

    def __post_init__(self) -> None:
        if self.min_total_comments < 1:
            raise ValueError("min_total_comments must be >= 1")
        if self.max_categories < 1:
            raise ValueError("max_categories must be >= 1")

    def effective_category_floor(self, total_comments: int) -> int:
        scaled = math.ceil(self.volume_floor_fraction * total_comments)
        return max(self.min_category_comments, scaled)


@dataclass(frozen=True)
class Citation:
    comment_id: str
    extract: str


@dataclass(frozen=True)
class Attribute:
    statement: str
    citations: tuple[Citation, ...]

    def __post_init__(self) -> None:
        if not self.citations:
            raise ValueError("every summary attribute needs at least one citation")


@dataclass(frozen=True)
class CategorySummary:
    category: str
    attributes: tuple[Attribute, ...]


@dataclass(frozen=True)
class SummaryDraft:
    categories: tuple[CategorySummary, ...]
    source_comment_count: int
    low_volume: bool = False


@dataclass(frozen=True)
class Eligibility:
    eligible: bool
    categories: tuple[str, ...]
    counts: dict[str, int]
    category_floor: int


def eligible(comments: Sequence[Comment], config: SummaryConfig) -> Eligibility:
    """Summarization gate: below min_total_comments nothing is generated;
    otherwise categories are ranked by comment volume, cut at the (volume
    scaled) per-category floor, truncated to max_categories, with manual
    small-category overrides appended."""
    total = len(comments)
    counts: dict[str, int] = {}
    for comment in comments:
        for label in comment.labels:
            counts[label] = counts.get(label, 0) + 1
    floor = config.effective_category_floor(total)
    if total < config.min_total_comments:
        return Eligibility(False, (), counts, floor)
    ranked = sorted(counts, key=lambda lab: (-counts[lab], lab))
    chosen = [lab for lab in ranked if counts[lab] >= floor][: config.max_categories]
    for lab in sorted(config.include_small_categories):
        if lab not in chosen and counts.get(lab, 0) > 0:
            chosen.append(lab)
    return Eligibility(True, tuple(chosen), counts, floor)


@dataclass(frozen=True)
class CommentBlock:
    comment_id: str
    text: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class PromptDocument:
    instructions: str
    categories: tuple[str, ...]
    comments: tuple[CommentBlock, ...]

    def render(self) -> str:
        lines = [self.instructions, "",
                 "Categories: " + ", ".join(self.categories), "", "Comments:"]
        for block in self.comments:
            labels = ", ".join(block.labels) if block.labels else "(unlabeled)"
            lines.append(f"[{block.comment_id}] ({labels}) {block.text}")
        return "\n".join(lines)


_INSTRUCTIONS_TEMPLATE = """\
Review the user comments below together with their topic classifications.
Write one summary per listed category. Only summarize a category if it has
at least {floor} comments; a higher floor applies on high-volume products.
For every statement in a summary, list the IDs of the comments that inform
it and quote the supporting passage from each comment verbatim.
Answer as JSON: {{"categories": [{{"name": ..., "attributes": [{{"statement": ...,
"citations": [{{"id": ..., "extract": ...}}]}}]}}]}}"""


def build_prompt(
    comments: Sequence[Comment],
    categories: Sequence[str],
    config: SummaryConfig,
) -> PromptDocument:
    """Instructional section (byte-identical across products for a given
    config: it states the policy, not per-product numbers) followed by the
    category list and one block per comment: id, text, labels."""
    if not categories:
        raise NotEligibleError("no eligible categories to summarize")
    total = len(comments)
    if total < config.min_total_comments:
        raise NotEligibleError(
            f"{total} comments is below the minimum of {config.min_total_comments}"
        )
    instructions = _INSTRUCTIONS_TEMPLATE.format(floor=config.min_category_comments)
    blocks = tuple(
        CommentBlock(
            comment_id=c.id,
            text=c.classification_text,
            labels=tuple(sorted(c.labels)),
        )
        for c in sorted(comments, key=lambda c: c.id)
    )
    return PromptDocument(instructions=instructions, categories=tuple(categories), comments=blocks)


# --- generation -----------------------------------------------------------------

def _parse_endpoint_response(payload: object, comment_count: int, low_band: tuple[int, int]) -> SummaryDraft:
    if not isinstance(payload, dict) or not isinstance(payload.get("categories"), list):
        raise ResponseSchemaError("response must be an object with a 'categories' array")
    categories = []
    for cat in payload["categories"]:
        if not isinstance(cat, dict) or not isinstance(cat.get("name"), str) \
                or not isinstance(cat.get("attributes"), list):
            raise ResponseSchemaError("each category needs a 'name' and an 'attributes' array")
        attributes = []
        for attr in cat["attributes"]:
            if not isinstance(attr, dict) or not isinstance(attr.get("statement"), str) \
                    or not isinstance(attr.get("citations"), list) or not attr["citations"]:
                raise ResponseSchemaError(
                    "each attribute needs a 'statement' and a non-empty 'citations' array"
                )
            citations = []
            for cit in attr["citations"]:
                if not isinstance(cit, dict) or not isinstance(cit.get("id"), str) \
                        or not isinstance(cit.get("extract"), str):
                    raise ResponseSchemaError("each citation needs string 'id' and 'extract'")
                citations.append(Citation(comment_id=cit["id"], extract=cit["extract"]))
            attributes.append(Attribute(statement=attr["statement"], citations=tuple(citations)))
        categories.append(CategorySummary(category=cat["name"], attributes=tuple(attributes)))
    return SummaryDraft(
        categories=tuple(categories),
        source_comment_count=comment_count,
        low_volume=low_band[0] <= comment_count <= low_band[1],
    )


def _generate_remote(prompt: PromptDocument, config: SummaryConfig) -> SummaryDraft:
    body = {
        "prompt": prompt.render(),
        "max_tokens": config.max_tokens,
        "temperature": config.temperature,
    }
    attempts = config.retries + 1
    last_timeout: Exception | None = None
    for _ in range(attempts):
        try:
            response = requests.post(config.endpoint, json=body, timeout=config.timeout_s)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_timeout = exc
            continue
        if response.status_code != 200:
            raise EndpointError(response.status_code)
        try:
            payload = response.json()
        except ValueError:
            raise ResponseSchemaError("endpoint returned malformed JSON") from None
        return _parse_endpoint_response(payload, len(prompt.comments), config.low_volume_band)
    raise EndpointTimeoutError(
        f"no answer from {config.endpoint} after {attempts} attempts"
    ) from last_timeout


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def _generate_offline(
    prompt: PromptDocument,
    config: SummaryConfig,
    embedder: EmbeddingModel | None,
    preprocess: PreprocessConfig,
) -> SummaryDraft:
    model = embedder if embedder is not None else EmbeddingModel(dim=64, seed=config.seed)
    vectors = {
        block.comment_id: embed_comment(block.text, model, preprocess).values
        for block in prompt.comments
    }
    categories = []
    for category in prompt.categories:
        members = [b for b in prompt.comments if category in b.labels]
        if not members:
            continue
        centroid = np.mean([vectors[b.comment_id] for b in members], axis=0)
        scored = sorted(
            members,
            key=lambda b: (-_cosine(vectors[b.comment_id], centroid), b.comment_id),
        )
        best = scored[0]
        attribute = Attribute(
            statement=best.text,
            citations=(Citation(comment_id=best.comment_id, extract=best.text),),
        )
        categories.append(CategorySummary(category=category, attributes=(attribute,)))
    count = len(prompt.comments)
    lo, hi = config.low_volume_band
    return SummaryDraft(
        categories=tuple(categories),
        source_comment_count=count,
        low_volume=lo <= count <= hi,
    )


def generate(
    prompt: PromptDocument,
    config: SummaryConfig,
    embedder: EmbeddingModel | None = None,
    preprocess: PreprocessConfig = DEFAULT_PREPROCESS,
) -> SummaryDraft:
    """Endpoint mode posts the prompt and parses the structured response
    strictly; offline mode picks each category's most central comment and
    cites it as itself. Endpoint failures fall back to offline only when
    explicitly configured."""
    if config.endpoint is None:
        return _generate_offline(prompt, config, embedder, preprocess)
    try:
        return _generate_remote(prompt, config)
    except (EndpointTimeoutError, EndpointError, ResponseSchemaError):
        if config.fallback_to_offline:
            return _generate_offline(prompt, config, embedder, preprocess)
        raise


# --- validation -----------------------------------------------------------------

class AttributeStatus(Enum):
    SUPPORTED = "supported"
    MISSING_ID = "missing_id"
    EXTRACT_NOT_FOUND = "extract_not_found"
    UNDER_SUPPORTED = "under_supported"


class CitationStatus(Enum):
    SUPPORTED = "supported"
    MISSING_ID = "missing_id"
    EXTRACT_NOT_FOUND = "extract_not_found"


_WS_RUN = re.compile(r"\s+")
_QUOTE_MAP = {0x2018: "'", 0x2019: "'", 0x201C: '"', 0x201D: '"'}


def normalize_for_match(text: str) -> str:
    """Case folding, curly-quote straightening, whitespace-run collapsing;
    nothing fuzzier, so 'verbatim' keeps meaning verbatim."""
    return _WS_RUN.sub(" ", text.translate(_QUOTE_MAP)).casefold().strip()


def _extract_found(extract: str, comment: Comment) -> bool:
    needle = normalize_for_match(extract)
    if not needle:
        return False
    if needle in normalize_for_match(comment.text):
        return True
    if comment.translated_text and needle in normalize_for_match(comment.translated_text):
        return True
    return False


@dataclass(frozen=True)
class CitationFinding:
    comment_id: str
    status: CitationStatus


@dataclass(frozen=True)
class AttributeFinding:
    category: str
    attribute_index: int
    status: AttributeStatus
    citations: tuple[CitationFinding, ...]


@dataclass(frozen=True)
class BalanceReport:
    corpus_distribution: dict[str, float]
    snippet_distribution: dict[str, float]
    max_count_deviation: int


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[AttributeFinding, ...]
    balance: BalanceReport | None = None

    @property
    def clean(self) -> bool:
        ok = all(f.status is AttributeStatus.SUPPORTED for f in self.findings)
        if self.balance is not None:
            ok = ok and self.balance.max_count_deviation <= 1
        return ok


def validate(draft: SummaryDraft, corpus: Corpus,
             config: SummaryConfig | None = None) -> ValidationReport:
    """Check every citation: the id must resolve in the corpus and the
    extract must be a normalized substring of the cited comment's text (or
    its translation). An attribute with fewer supported citations than the
    per-attribute floor is under-supported."""
    floor = (config or SummaryConfig()).per_attribute_min_support
    findings = []
    for category in draft.categories:
        for idx, attribute in enumerate(category.attributes):
            citation_findings = []
            for citation in attribute.citations:
                comment = corpus.get(citation.comment_id)
                if comment is None:
                    status = CitationStatus.MISSING_ID
                elif not _extract_found(citation.extract, comment):
                    status = CitationStatus.EXTRACT_NOT_FOUND
                else:
                    status = CitationStatus.SUPPORTED
                citation_findings.append(CitationFinding(citation.comment_id, status))
            statuses = [c.status for c in citation_findings]
            supported = statuses.count(CitationStatus.SUPPORTED)
            if CitationStatus.MISSING_ID in statuses:
                attr_status = AttributeStatus.MISSING_ID
            elif CitationStatus.EXTRACT_NOT_FOUND in statuses:
                attr_status = AttributeStatus.EXTRACT_NOT_FOUND
            elif supported < floor:
                attr_status = AttributeStatus.UNDER_SUPPORTED
            else:
                attr_status = AttributeStatus.SUPPORTED
            findings.append(AttributeFinding(
                category=category.category, attribute_index=idx,
                status=attr_status, citations=tuple(citation_findings),
            ))
    return ValidationReport(findings=tuple(findings))


# --- snippet selection -------------------------------------------------------------

@dataclass(frozen=True)
class Snippet:
    comment_id: str
    extract: str
    sentiment: Sentiment | None
    cited_by: int


def _largest_remainder(quotas: dict[str, float], total: int) -> dict[str, int]:
    base = {key: int(q) for key, q in quotas.items()}
    remainder = total - sum(base.values())
    order = sorted(
        quotas,
        key=lambda key: (-(quotas[key] - base[key]), -quotas[key], key),
    )
    for key in order[:remainder]:
        base[key] += 1
    return base


@dataclass(frozen=True)
class SnippetSelection:
    snippets: tuple[Snippet, ...]
    balance: BalanceReport


def select_snippets(draft: SummaryDraft, corpus: Corpus, config: SummaryConfig) -> SnippetSelection:
    """Pick snippet_count supported citations whose sentiment mix follows the
    corpus distribution (largest-remainder apportionment, so each class is
    within one snippet of its ideal share). Ties prefer comments cited by
    more attributes, then shorter extracts."""
    report = validate(draft, corpus, config)
    supported: dict[str, Citation] = {}
    cited_by: dict[str, int] = {}
    all_attributes = (a for c in draft.categories for a in c.attributes)
    for attribute, finding in zip(all_attributes, report.findings):
        for citation, cf in zip(attribute.citations, finding.citations):
            if cf.status is not CitationStatus.SUPPORTED:
                continue
            cited_by[citation.comment_id] = cited_by.get(citation.comment_id, 0) + 1
            existing = supported.get(citation.comment_id)
            if existing is None or len(citation.extract) < len(existing.extract):
                supported[citation.comment_id] = citation
    if config.snippet_count > len(supported):
        raise InsufficientSupportedError(
            f"need {config.snippet_count} snippets but only {len(supported)} supported citations"
        )

    sentiment_of = {cid: corpus.require(cid).sentiment for cid in supported}
    classes = [s for s in Sentiment]
    corpus_counts = {s.display: 0 for s in classes}
    with_sentiment = 0
    for comment in corpus.comments:
        if comment.sentiment is not None:
            corpus_counts[comment.sentiment.display] += 1
            with_sentiment += 1
    if with_sentiment == 0:
        corpus_dist = {name: 0.0 for name in corpus_counts}
        quotas = {name: 0.0 for name in corpus_counts}
        quotas["Negative"] = float(config.snippet_count)
    else:
        corpus_dist = {name: c / with_sentiment for name, c in corpus_counts.items()}
        quotas = {name: config.snippet_count * share for name, share in corpus_dist.items()}
    targets = _largest_remainder(quotas, config.snippet_count)

    def rank(cid: str) -> tuple:
        return (-cited_by[cid], len(supported[cid].extract), cid)

    chosen: list[str] = []
    for name in corpus_counts:
        pool = sorted(
            (cid for cid in supported
             if sentiment_of[cid] is not None and sentiment_of[cid].display == name
             and cid not in chosen),
            key=rank,
        )
        chosen.extend(pool[: targets[name]])
    if len(chosen) < config.snippet_count:
        leftovers = sorted((cid for cid in supported if cid not in chosen), key=rank)
        chosen.extend(leftovers[: config.snippet_count - len(chosen)])

    snippet_counts = {name: 0 for name in corpus_counts}
    for cid in chosen:
        s = sentiment_of[cid]
        if s is not None:
            snippet_counts[s.display] += 1
    deviation = max(
        abs(snippet_counts[name] - targets[name]) for name in corpus_counts
    ) if corpus_counts else 0
    balance = BalanceReport(
        corpus_distribution=corpus_dist,
        snippet_distribution={
            name: (snippet_counts[name] / len(chosen) if chosen else 0.0)
            for name in corpus_counts
        },
        max_count_deviation=deviation,
    )
    snippets = tuple(
        Snippet(
            comment_id=cid,
            extract=supported[cid].extract,
            sentiment=sentiment_of[cid],
            cited_by=cited_by[cid],
        )
        for cid in chosen
    )
    return SnippetSelection(snippets=snippets, balance=balance)


# --- repair ---------------------------------------------------------------------

@dataclass(frozen=True)
class RepairResult:
    draft: SummaryDraft
    dropped_attributes: tuple[tuple[str, int], ...]
    removed_citations: tuple[str, ...]


def repair(
    draft: SummaryDraft,
    report: ValidationReport,
    corpus: Corpus | None = None,
    expand_extracts: Iterable[str] = (),
) -> RepairResult:
    """Strip citations flagged MissingId/ExtractNotFound; drop attributes
    left with no citations (reported); expand operator-flagged truncated
    extracts to the full comment text. Idempotent, never adds attributes."""
    expand = set(expand_extracts)
    by_key = {(f.category, f.attribute_index): f for f in report.findings}
    dropped: list[tuple[str, int]] = []
    removed: list[str] = []
    categories = []
    for category in draft.categories:
        attributes = []
        for idx, attribute in enumerate(category.attributes):
            finding = by_key.get((category.category, idx))
            kept = []
            for c_idx, citation in enumerate(attribute.citations):
                status = (
                    finding.citations[c_idx].status
                    if finding is not None else CitationStatus.SUPPORTED
                )
                if status is not CitationStatus.SUPPORTED:
                    removed.append(citation.comment_id)
                    continue
                if citation.comment_id in expand and corpus is not None:
                    comment = corpus.get(citation.comment_id)
                    if comment is not None:
                        citation = replace(citation, extract=comment.classification_text)
                kept.append(citation)
            if kept:
                attributes.append(replace(attribute, citations=tuple(kept)))
            else:
                dropped.append((category.category, idx))
        if attributes:
            categories.append(replace(category, attributes=tuple(attributes)))
    return RepairResult(
        draft=replace(draft, categories=tuple(categories)),
        dropped_attributes=tuple(dropped),
        removed_citations=tuple(removed),
    )


# --- rendering ------------------------------------------------------------------

LOW_VOLUME_BANNER = (
    "> low-volume: representativeness caution; based on a small number of comments"
)


def render_summary_markdown(
    draft: SummaryDraft,
    snippets: Sequence[Snippet] = (),
) -> str:
    """Published form: category-prefaced paragraphs plus selected verbatim
    snippets."""
    lines = []
    if draft.low_volume:
        lines += [LOW_VOLUME_BANNER, ""]
    for category in draft.categories:
        statements = " ".join(a.statement for a in category.attributes)
        lines.append(f"**{category.category}:** {statements}")
        lines.append("")
    if snippets:
        lines.append("Selected comments:")
        for snippet in snippets:
            tone = snippet.sentiment.display if snippet.sentiment else "Unrated"
            lines.append(f'- [{snippet.comment_id}] ({tone}) "{snippet.extract}"')
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def draft_to_dict(draft: SummaryDraft) -> dict:
    return {
        "source_comment_count": draft.source_comment_count,
        "low_volume": draft.low_volume,
        "categories": [
            {
                "name": cat.category,
                "attributes": [
                    {
                        "statement": attr.statement,
                        "citations": [
                            {"id": c.comment_id, "extract": c.extract}
                            for c in attr.citations
                        ],
                    }
                    for attr in cat.attributes
                ],
            }
            for cat in draft.categories
        ],
    }


def draft_from_dict(data: dict) -> SummaryDraft:
    parsed = _parse_endpoint_response(
        {"categories": [
            {"name": cat["name"], "attributes": cat["attributes"]}
            for cat in data["categories"]
        ]},
        data.get("source_comment_count", 0),
        (20, 50),
    )
    return replace(parsed, low_volume=data.get("low_volume", False))


def report_to_dict(report: ValidationReport) -> dict:
    return {
        "clean": report.clean,
        "findings": [
            {
                "category": f.category,
                "attribute_index": f.attribute_index,
                "status": f.status.value,
                "citations": [
                    {"id": c.comment_id, "status": c.status.value} for c in f.citations
                ],
            }
            for f in report.findings
        ],
        "balance": None if report.balance is None else {
            "corpus_distribution": report.balance.corpus_distribution,
            "snippet_distribution": report.balance.snippet_distribution,
            "max_count_deviation": report.balance.max_count_deviation,
        },
    }
