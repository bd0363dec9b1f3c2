"""Declarative pipeline configuration (TOML) with fail-closed parsing:
unknown keys are rejected rather than silently ignored."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import boost, multilabel, summarize, textprep
from .errors import ConfigError, InvalidParamsError
from .util import parse_rfc3339


@dataclass(frozen=True)
class PathsConfig:
    comments: str = "data/comments.jsonl"
    responses: str | None = None
    format: str = "jsonl"
    models_dir: str = "models"
    reports_dir: str = "reports"


@dataclass(frozen=True)
class StatsConfig:
    level: float = 0.95
    replicates: int = 10_000
    seed: int = 42


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    jobs: int = 1
    paths: PathsConfig = field(default_factory=PathsConfig)
    preprocess: textprep.PreprocessConfig = field(default_factory=textprep.PreprocessConfig)
    embedding_mode: str = "subword_hash"
    embedding_dim: int = 64
    ngram_min: int = 3
    ngram_max: int = 6
    bucket_count: int = 2_000_000
    embedding_seed: int = 42
    vectors_path: str | None = None
    training: boost.GBTParams = field(default_factory=lambda: boost.GBTParams(
        learning_rate=0.3, n_rounds=40, max_depth=3))
    threshold: float = 0.5
    grid: multilabel.ParamGrid = field(default_factory=multilabel.ParamGrid)
    cv_folds: int = 5
    stats: StatsConfig = field(default_factory=StatsConfig)
    summary: summarize.SummaryConfig = field(default_factory=summarize.SummaryConfig)
    period: tuple[datetime, datetime] | None = None

    def build_embedding_model(self) -> textprep.EmbeddingModel:
        if self.embedding_mode == "external":
            if not self.vectors_path:
                raise ConfigError("embedding.mode 'external' needs embedding.vectors_path")
            return textprep.load_vectors(
                self.vectors_path, dim=self.embedding_dim,
                ngram_min=self.ngram_min, ngram_max=self.ngram_max,
                bucket_count=self.bucket_count, seed=self.embedding_seed,
            )
        if self.embedding_mode != "subword_hash":
            raise ConfigError(f"unknown embedding.mode {self.embedding_mode!r}")
        return textprep.EmbeddingModel(
            dim=self.embedding_dim, ngram_min=self.ngram_min, ngram_max=self.ngram_max,
            bucket_count=self.bucket_count, seed=self.embedding_seed,
        )


def _take(section: dict, allowed: dict[str, object], where: str) -> dict:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in [{where}]")
    merged = dict(allowed)
    merged.update(section)
    return merged


def parse_config(data: dict) -> PipelineConfig:
    top = _take(data, {
        "seed": 42, "jobs": 1, "paths": {}, "preprocess": {}, "embedding": {},
        "training": {}, "grid": {}, "stats": {}, "summary": {}, "period": {},
    }, "top level")

    paths = _take(top["paths"], {
        "comments": "data/comments.jsonl", "responses": "", "format": "jsonl",
        "models_dir": "models", "reports_dir": "reports",
    }, "paths")
    pre = _take(top["preprocess"], {
        "strip_urls": True, "strip_punctuation": True, "lemmatize": True,
        "lowercase": True, "extra_stopwords": [],
    }, "preprocess")
    emb = _take(top["embedding"], {
        "mode": "subword_hash", "dim": 64, "ngram_min": 3, "ngram_max": 6,
        "bucket_count": 2_000_000, "seed": 42, "vectors_path": "",
    }, "embedding")
    training = _take(top["training"], {
        "learning_rate": 0.3, "n_rounds": 40, "max_depth": 3,
        "min_loss_reduction": 0.0, "l2_weight": 1.0, "l1_weight": 0.0,
        "min_child_weight": 0.0, "threshold": 0.5,
    }, "training")
    grid = _take(top["grid"], {
        "learning_rate": [0.05, 0.1, 0.3], "max_depth": [3, 5, 7],
        "min_loss_reduction": [0.0, 1.0], "l2_weight": [1.0, 10.0],
        "l1_weight": [0.0, 1.0], "n_rounds": [100, 300], "k": 5,
    }, "grid")
    stats_cfg = _take(top["stats"], {"level": 0.95, "replicates": 10_000, "seed": 42}, "stats")
    summary = _take(top["summary"], {
        "min_total_comments": 20, "min_category_comments": 4,
        "volume_floor_fraction": 0.02, "max_categories": 4,
        "include_small_categories": [], "snippet_count": 5,
        "per_attribute_min_support": 1, "endpoint": "", "timeout_s": 30.0,
        "retries": 2, "fallback_to_offline": False,
    }, "summary")
    period_raw = _take(top["period"], {"start": "", "end": ""}, "period")

    stopwords = textprep.STOPWORDS | frozenset(w.lower() for w in pre["extra_stopwords"])
    threshold = training.pop("threshold")
    seed = int(top["seed"])
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    try:
        params = boost.GBTParams(seed=seed, **training)
        param_grid = multilabel.ParamGrid(
            learning_rate=tuple(grid["learning_rate"]),
            max_depth=tuple(grid["max_depth"]),
            min_loss_reduction=tuple(grid["min_loss_reduction"]),
            l2_weight=tuple(grid["l2_weight"]),
            l1_weight=tuple(grid["l1_weight"]),
            n_rounds=tuple(grid["n_rounds"]),
            base=boost.GBTParams(seed=seed),
        )
        summary_cfg = summarize.SummaryConfig(
            min_total_comments=summary["min_total_comments"],
            min_category_comments=summary["min_category_comments"],
            volume_floor_fraction=summary["volume_floor_fraction"],
            max_categories=summary["max_categories"],
            include_small_categories=frozenset(summary["include_small_categories"]),
            snippet_count=summary["snippet_count"],
            per_attribute_min_support=summary["per_attribute_min_support"],
            endpoint=summary["endpoint"] or None,
            timeout_s=summary["timeout_s"],
            retries=summary["retries"],
            seed=seed,
            fallback_to_offline=summary["fallback_to_offline"],
        )
    except (ValueError, TypeError, InvalidParamsError) as exc:
        raise ConfigError(str(exc)) from None

    period = None
    if period_raw["start"] or period_raw["end"]:
        if not (period_raw["start"] and period_raw["end"]):
            raise ConfigError("period needs both start and end")
        period = (parse_rfc3339(period_raw["start"]), parse_rfc3339(period_raw["end"]))

    return PipelineConfig(
        seed=seed,
        jobs=int(top["jobs"]),
        paths=PathsConfig(
            comments=paths["comments"],
            responses=paths["responses"] or None,
            format=paths["format"],
            models_dir=paths["models_dir"],
            reports_dir=paths["reports_dir"],
        ),
        preprocess=textprep.PreprocessConfig(
            stopwords=stopwords,
            strip_urls=pre["strip_urls"],
            strip_punctuation=pre["strip_punctuation"],
            lemmatize=pre["lemmatize"],
            lowercase=pre["lowercase"],
        ),
        embedding_mode=emb["mode"],
        embedding_dim=emb["dim"],
        ngram_min=emb["ngram_min"],
        ngram_max=emb["ngram_max"],
        bucket_count=emb["bucket_count"],
        embedding_seed=emb["seed"],
        vectors_path=emb["vectors_path"] or None,
        training=params,
        threshold=threshold,
        grid=param_grid,
        cv_folds=int(grid["k"]),
        stats=StatsConfig(
            level=stats_cfg["level"],
            replicates=stats_cfg["replicates"],
            seed=stats_cfg["seed"],
        ),
        summary=summary_cfg,
        period=period,
    )


def load_config(path: str | Path) -> PipelineConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
