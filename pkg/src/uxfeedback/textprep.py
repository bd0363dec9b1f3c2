"""Text preprocessing and comment embedding.

A comment becomes a fixed-dimension vector by averaging L2-normalized word
vectors. Word vectors come either from a deterministic subword-hashing
scheme (character n-grams of the padded word hashed into a bucket table of
seeded pseudo-random vectors) or from an external pre-trained text vector
file, with subword hashing as the out-of-vocabulary fallback.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmptyTokenError, VectorParseError

# English function words removed before embedding; configurable per pipeline.
STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be
because been before being below between both but by can cannot could
couldn't did didn't do does doesn't doing don't down during each few for
from further had hadn't has hasn't have haven't having he he'd he'll he's
her here here's hers herself him himself his how how's i i'd i'll i'm i've
if in into is isn't it it's its itself let's me more most mustn't my myself
no nor not of off on once only or other ought our ours ourselves out over
own same shan't she she'd she'll she's should shouldn't so some such than
that that's the their theirs them themselves then there there's these they
they'd they'll they're they've this those through to too under until up
very was wasn't we we'd we'll we're we've were weren't what what's when
when's where where's which while who who's whom why why's with won't would
wouldn't you you'd you'll you're you've your yours yourself yourselves
""".split())

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_PUNCT_TABLE = {
    ord(ch): " "
    for ch in "!\"#$%&()*+,-./:;<=>?@[\\]^_`{|}~…–—¡¿"
}
_PUNCT_TABLE.update({0x2018: "'", 0x2019: "'", 0x201C: " ", 0x201D: " "})

# Overrides for words the suffix rules would mangle.
_LEMMA_EXCEPTIONS = {
    "using": "use", "used": "use", "uses": "use",
    "doing": "do", "does": "do", "goes": "go", "going": "go",
    "has": "have", "had": "have", "having": "have",
    "tries": "try", "tried": "try",
    "bus": "bus", "gas": "gas", "yes": "yes", "its": "its", "app": "app",
    "apps": "app", "perhaps": "perhaps", "always": "always",
    "series": "series", "species": "species",
}

_VOWELS = set("aeiou")


def _lemmatize(word: str) -> str:
    """Rule-based suffix stripping: plural -s/-es, gerund -ing, past -ed."""
    if word in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[word]
    if len(word) >= 5 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) >= 5 and word.endswith("sses"):
        return word[:-2]
    if len(word) >= 4 and word.endswith("es") and (
        word[-3] in "sxz" or word.endswith(("ches", "shes"))
    ):
        return word[:-2]
    if len(word) >= 4 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    for suffix in ("ing", "ed"):
        if len(word) > len(suffix) + 2 and word.endswith(suffix):
            if suffix == "ed" and word.endswith("eed"):
                return word
            stem = word[: -len(suffix)]
            if len(stem) < 3:
                return word
            if stem[-1] == stem[-2] and stem[-1] not in "lsz":
                return stem[:-1]
            if (
                stem[-1] not in _VOWELS
                and stem[-1] not in "wxy"
                and stem[-2] in _VOWELS
                and stem[-3] not in _VOWELS
            ):
                return stem + "e"
            return stem
    return word


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset[str] = STOPWORDS
    strip_urls: bool = True
    strip_punctuation: bool = True
    lemmatize: bool = True
    lowercase: bool = True

    def __post_init__(self) -> None:
        bad = [w for w in self.stopwords if w != w.lower()]
        if bad:
            raise ValueError(f"stopword list must be lowercase, got {bad[:3]}")


DEFAULT_PREPROCESS = PreprocessConfig()


def preprocess(text: str, config: PreprocessConfig = DEFAULT_PREPROCESS) -> list[str]:
    """Tokenize after URL/punctuation stripping, stopword removal, and
    lemmatization. Deterministic; an empty result is valid."""
    if config.strip_urls:
        text = _URL_RE.sub(" ", text)
    if config.lowercase:
        text = text.lower()
    if config.strip_punctuation:
        text = text.translate(_PUNCT_TABLE)
    tokens = text.split()
    tokens = [t for t in tokens if t not in config.stopwords]
    if config.lemmatize:
        tokens = [_lemmatize(t) for t in tokens]
    return tokens


class EmbeddingMode(Enum):
    SUBWORD_HASH = "subword_hash"
    EXTERNAL_VECTORS = "external_vectors"


def _fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass
class EmbeddingModel:
    """Immutable after construction; embedding calls are pure and thread-safe
    (the internal bucket cache only memoizes deterministic values)."""

    dim: int = 300
    mode: EmbeddingMode = EmbeddingMode.SUBWORD_HASH
    ngram_min: int = 3
    ngram_max: int = 6
    bucket_count: int = 2_000_000
    seed: int = 42
    vectors: dict[str, np.ndarray] | None = None
    _bucket_cache: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)
    _word_cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 1 <= self.ngram_min <= self.ngram_max:
            raise ValueError("need 1 <= ngram_min <= ngram_max")
        if self.bucket_count < 1:
            raise ValueError("bucket_count must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.mode is EmbeddingMode.EXTERNAL_VECTORS and self.vectors is None:
            raise ValueError("external mode requires a vectors table")
        if self.vectors:
            for word, vec in self.vectors.items():
                if vec.shape != (self.dim,):
                    raise DimensionMismatchError(
                        f"vector for {word!r} has length {vec.shape}, expected {self.dim}"
                    )

    def fingerprint(self) -> str:
        """Identifies the embedding configuration so classifiers can refuse
        vectors produced under a different one."""
        h = hashlib.sha256()
        h.update(
            f"{self.mode.value}|{self.dim}|{self.ngram_min}|{self.ngram_max}"
            f"|{self.bucket_count}|{self.seed}".encode()
        )
        if self.vectors is not None:
            for word in sorted(self.vectors):
                h.update(word.encode("utf-8"))
                h.update(self.vectors[word].tobytes())
        return h.hexdigest()[:16]

    def _bucket_vector(self, bucket: int) -> np.ndarray:
        cached = self._bucket_cache.get(bucket)
        if cached is None:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, bucket]))
            cached = rng.standard_normal(self.dim)
            self._bucket_cache[bucket] = cached
        return cached

    def _subword_vector(self, word: str) -> np.ndarray:
        padded = f"<{word}>"
        keys = [padded]
        for n in range(self.ngram_min, self.ngram_max + 1):
            keys.extend(padded[i:i + n] for i in range(len(padded) - n + 1))
        total = np.zeros(self.dim)
        for key in keys:
            total += self._bucket_vector(_fnv1a_64(key.encode("utf-8")) % self.bucket_count)
        return total


def embed_word(word: str, model: EmbeddingModel) -> np.ndarray:
    """Unit vector for one token; deterministic given the model seed."""
    if not word:
        raise EmptyTokenError("cannot embed an empty token")
    cached = model._word_cache.get(word)
    if cached is not None:
        return cached
    raw = None
    if model.mode is EmbeddingMode.EXTERNAL_VECTORS:
        raw = model.vectors.get(word)
    if raw is None:
        raw = model._subword_vector(word)
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        unit = np.zeros(model.dim)
        unit[0] = 1.0
    else:
        unit = raw / norm
    unit.flags.writeable = False
    model._word_cache[word] = unit
    return unit


@dataclass(frozen=True)
class CommentVector:
    values: np.ndarray
    token_count: int

    def __post_init__(self) -> None:
        self.values.flags.writeable = False


def embed_comment(
    text: str,
    model: EmbeddingModel,
    config: PreprocessConfig = DEFAULT_PREPROCESS,
) -> CommentVector:
    """Mean of the unit word vectors of the surviving tokens.

    Summation runs over lexicographically sorted unique tokens weighted by
    count, so any reordering of tokens gives a bit-identical vector.
    """
    tokens = preprocess(text, config)
    if not tokens:
        return CommentVector(np.zeros(model.dim), 0)
    counts: dict[str, int] = {}
    for token in tokens:
        counts[token] = counts.get(token, 0) + 1
    total = np.zeros(model.dim)
    for token in sorted(counts):
        total += counts[token] * embed_word(token, model)
    return CommentVector(total / len(tokens), len(tokens))


def embed_texts(
    texts: list[str],
    model: EmbeddingModel,
    config: PreprocessConfig = DEFAULT_PREPROCESS,
) -> np.ndarray:
    """Feature matrix (n, dim) for a batch of comment texts."""
    out = np.zeros((len(texts), model.dim))
    for i, text in enumerate(texts):
        out[i] = embed_comment(text, model, config).values
    return out


def load_vectors(
    path: str | Path,
    dim: int,
    ngram_min: int = 3,
    ngram_max: int = 6,
    bucket_count: int = 2_000_000,
    seed: int = 42,
) -> EmbeddingModel:
    """Parse the standard text vector format: an optional "count dim" header
    line, then one word plus dim whitespace-separated floats per line.
    Out-of-vocabulary lookups fall back to subword hashing with the given
    n-gram settings."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        line_no = 1
        parts = first.split()
        if len(parts) == 2 and all(p.lstrip("+-").isdigit() for p in parts):
            declared_dim = int(parts[1])
            if declared_dim != dim:
                raise DimensionMismatchError(
                    f"header declares dim {declared_dim}, expected {dim}", line=1
                )
        elif parts:
            _parse_vector_row(parts, dim, line_no, vectors)
        for raw in fh:
            line_no += 1
            parts = raw.split()
            if not parts:
                continue
            _parse_vector_row(parts, dim, line_no, vectors)
    return EmbeddingModel(
        dim=dim,
        mode=EmbeddingMode.EXTERNAL_VECTORS,
        ngram_min=ngram_min,
        ngram_max=ngram_max,
        bucket_count=bucket_count,
        seed=seed,
        vectors=vectors,
    )


def _parse_vector_row(parts: list[str], dim: int, line_no: int, out: dict[str, np.ndarray]) -> None:
    word = parts[0]
    if len(parts) - 1 != dim:
        raise DimensionMismatchError(
            f"row has {len(parts) - 1} values, expected {dim}", line=line_no
        )
    try:
        vec = np.array([float(x) for x in parts[1:]])
    except ValueError as exc:
        raise VectorParseError(line_no, str(exc)) from None
    out[word] = vec


def write_vectors(vectors: dict[str, np.ndarray], path: str | Path) -> None:
    """Write vectors in the same text format load_vectors reads."""
    words = sorted(vectors)
    if not words:
        raise ValueError("nothing to write")
    dim = len(vectors[words[0]])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {dim}\n")
        for word in words:
            fh.write(word + " " + " ".join(repr(float(x)) for x in vectors[word]) + "\n")
