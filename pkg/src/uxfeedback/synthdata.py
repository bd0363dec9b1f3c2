"""Deterministic synthetic corpora for demos and tests.

Three products:
- "alpha": human-labeled comments with label-specific signal words (the
  classification showcase) plus some unlabeled comments for prediction.
- "beta": a tutorial-survey product whose sentiment x NPS joint counts
  replay the reference 3x3 distribution, with quality-item answers.
- "gamma": an app-survey product with a plausible sentiment x PSAT mix and
  UX-Lite items.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import (
    Comment,
    Corpus,
    LabelSource,
    Sentiment,
    SurveyKind,
    SurveyResponse,
    default_taxonomy,
    export,
)

SIGNAL_WORDS = {
    "Usability": ("confusing", "navigation", "workflow", "clunky", "menu"),
    "Functionality": ("feature", "missing", "capability", "option", "toggle"),
    "Error": ("crash", "exception", "failure", "bug", "broken"),
    "Other": ("miscellaneous", "tangent", "aside", "unrelated", "sundry"),
    "Performance": ("slow", "lag", "latency", "sluggish", "timeout"),
    "General Feedback": ("overall", "great", "love", "nice", "awesome"),
    "Help": ("documentation", "tutorial", "guide", "manual", "instructions"),
    "Visual Design": ("layout", "color", "font", "icons", "theme"),
    "Integration": ("connector", "api", "sync", "import", "export"),
    "Licensing": ("license", "pricing", "subscription", "entitlement", "cost"),
}

_FILLER = (
    "product", "screen", "team", "release", "version", "account", "project",
    "today", "really", "somewhat", "still", "again", "often", "maybe",
)

# Reference sentiment x NPS distribution for the tutorial survey demo.
TUTORIAL_JOINT = {
    ("Negative", 3): 120, ("Negative", 7): 52, ("Negative", 10): 154,
    ("Mixed", 3): 4, ("Mixed", 7): 7, ("Mixed", 10): 27,
    ("Positive", 3): 5, ("Positive", 7): 13, ("Positive", 10): 157,
}

# Plausible sentiment x PSAT distribution for the app survey demo.
APP_JOINT = {
    ("Negative", 1): 60, ("Negative", 2): 50, ("Negative", 3): 30,
    ("Negative", 4): 25, ("Negative", 5): 5,
    ("Mixed", 1): 5, ("Mixed", 2): 8, ("Mixed", 3): 15, ("Mixed", 4): 20, ("Mixed", 5): 7,
    ("Positive", 1): 2, ("Positive", 2): 1, ("Positive", 3): 3,
    ("Positive", 4): 20, ("Positive", 5): 35,
}

_SENTIMENT = {
    "Negative": Sentiment.NEGATIVE,
    "Mixed": Sentiment.MIXED,
    "Positive": Sentiment.POSITIVE,
}

UTC = timezone.utc


def _comment_text(rng: np.random.Generator, labels: frozenset[str]) -> str:
    words: list[str] = []
    for label in sorted(labels):
        pool = SIGNAL_WORDS[label]
        picks = rng.integers(2, len(pool) + 1)
        words.extend(rng.choice(pool, size=picks, replace=False).tolist())
    words.extend(rng.choice(_FILLER, size=rng.integers(3, 7), replace=False).tolist())
    order = rng.permutation(len(words))
    return " ".join(words[i] for i in order)


def make_signal_corpus(
    n: int = 500,
    seed: int = 13,
    multi_label_rate: float = 0.2,
) -> tuple[list[str], list[frozenset[str]]]:
    """Comment texts whose labels are recoverable from embedded signal words."""
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    names = list(SIGNAL_WORDS)
    texts, labelsets = [], []
    for i in range(n):
        primary = names[int(rng.integers(len(names)))]
        labels = {primary}
        if rng.random() < multi_label_rate:
            other = names[int(rng.integers(len(names)))]
            labels.add(other)
        labels = frozenset(labels)
        texts.append(_comment_text(rng, labels))
        labelsets.append(labels)
    return texts, labelsets


def _timestamp(rng: np.random.Generator, base: datetime, spread_days: int) -> datetime:
    return base + timedelta(days=int(rng.integers(0, spread_days)),
                            hours=int(rng.integers(0, 24)))


def make_demo_corpus(seed: int = 7) -> Corpus:
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    taxonomy = default_taxonomy()
    comments: list[Comment] = []
    responses: list[SurveyResponse] = []

    # product alpha: labeled training pool + unlabeled backlog
    texts, labelsets = make_signal_corpus(n=220, seed=seed)
    sentiments = {
        "Error": Sentiment.NEGATIVE, "Performance": Sentiment.NEGATIVE,
        "General Feedback": Sentiment.POSITIVE,
    }
    for i, (text, labels) in enumerate(zip(texts, labelsets)):
        primary = sorted(labels)[0]
        sentiment = sentiments.get(
            primary,
            (Sentiment.NEGATIVE, Sentiment.MIXED, Sentiment.POSITIVE)[int(rng.integers(3))],
        )
        quarter_start = datetime(2023, 1 + 3 * int(rng.integers(4)), 1, tzinfo=UTC)
        comments.append(Comment(
            id=f"alpha-{i:04d}", product_id="alpha",
            timestamp=_timestamp(rng, quarter_start, 80),
            text=text, language="en", sentiment=sentiment,
            labels=labels, label_source=LabelSource.HUMAN,
        ))
    unlabeled_texts, _ = make_signal_corpus(n=40, seed=seed + 1)
    for i, text in enumerate(unlabeled_texts):
        comments.append(Comment(
            id=f"alpha-u{i:04d}", product_id="alpha",
            timestamp=_timestamp(rng, datetime(2023, 10, 1, tzinfo=UTC), 80),
            text=text, language="en",
            sentiment=(Sentiment.NEGATIVE, Sentiment.MIXED, Sentiment.POSITIVE)[int(rng.integers(3))],
            labels=frozenset(), label_source=LabelSource.UNLABELED,
        ))

    # product beta: tutorial survey replaying the reference joint counts
    _TONE_TEXT = {
        "Negative": "the tutorial steps kept failing for me",
        "Mixed": "parts were helpful but the setup section lost me",
        "Positive": "clear walkthrough that got me started quickly",
    }
    idx = 0
    for (row, nps), count in TUTORIAL_JOINT.items():
        for _ in range(count):
            cid = f"beta-{idx:05d}"
            comments.append(Comment(
                id=cid, product_id="beta",
                timestamp=_timestamp(rng, datetime(2023, 4, 1, tzinfo=UTC), 170),
                text=f"{_TONE_TEXT[row]} ({idx})", language="en",
                sentiment=_SENTIMENT[row],
                labels=frozenset(), label_source=LabelSource.UNLABELED,
            ))
            base_quality = {"Negative": 7, "Mixed": 8, "Positive": 9}[row]
            items = {
                f"quality_{q}": int(np.clip(base_quality + rng.integers(-2, 3), 0, 10))
                for q in range(1, 6)
            }
            answers = {"nps": nps, **items}
            responses.append(SurveyResponse(
                respondent_id=f"beta-r{idx:05d}", product_id="beta",
                timestamp=_timestamp(rng, datetime(2023, 4, 2, tzinfo=UTC), 170),
                survey_kind=SurveyKind.TUTORIAL, answers=answers, comment_id=cid,
            ))
            idx += 1

    # product gamma: app survey with PSAT and UX-Lite items
    _GAMMA_TEXT = {
        "Negative": "the dashboard misbehaves more than it should",
        "Mixed": "does the job although some screens feel dated",
        "Positive": "smooth experience and reliable exports",
    }
    idx = 0
    for (row, psat), count in APP_JOINT.items():
        for _ in range(count):
            cid = f"gamma-{idx:05d}"
            comments.append(Comment(
                id=cid, product_id="gamma",
                timestamp=_timestamp(rng, datetime(2023, 2, 1, tzinfo=UTC), 300),
                text=f"{_GAMMA_TEXT[row]} ({idx})", language="en",
                sentiment=_SENTIMENT[row],
                labels=frozenset(), label_source=LabelSource.UNLABELED,
            ))
            does_what = int(np.clip(psat + rng.integers(-1, 2), 1, 5))
            easy = int(np.clip(psat + rng.integers(-1, 2), 1, 5))
            responses.append(SurveyResponse(
                respondent_id=f"gamma-r{idx:05d}", product_id="gamma",
                timestamp=_timestamp(rng, datetime(2023, 2, 2, tzinfo=UTC), 300),
                survey_kind=SurveyKind.APP,
                answers={"psat": psat, "does_what": does_what, "easy_to_use": easy},
                comment_id=cid,
            ))
            idx += 1

    return Corpus(tuple(comments), tuple(responses), taxonomy)


_DEMO_CONFIG = """\
seed = 42

[paths]
comments = "comments.jsonl"
responses = "responses.jsonl"
models_dir = "models"
reports_dir = "reports"

[embedding]
dim = 64
bucket_count = 100000

[training]
learning_rate = 0.3
n_rounds = 40
max_depth = 3

[grid]
learning_rate = [0.1, 0.3]
max_depth = [2, 3]
min_loss_reduction = [0.0]
l2_weight = [1.0]
l1_weight = [0.0]
n_rounds = [20]
k = 3

[stats]
replicates = 2000
seed = 42
"""


def write_demo_files(directory: str | Path, seed: int = 7) -> Path:
    """Write comments.jsonl, responses.jsonl, and pipeline.toml for a
    self-contained end-to-end run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = make_demo_corpus(seed)
    export(corpus, directory / "comments.jsonl", directory / "responses.jsonl")
    (directory / "pipeline.toml").write_text(_DEMO_CONFIG, encoding="utf-8")
    return directory / "pipeline.toml"
