"""Command-line orchestration: ingest -> tune/train -> predict/evaluate ->
stats -> summarize -> report.

Exit codes: 0 success, 1 I/O, 2 schema/config, 3 model or length mismatch,
4 empty statistics selection, 5 summary validation failure. Standard output
carries data; diagnostics go to standard error. All commands are
deterministic given config + seed (offline mode).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import boost, corpus as corpus_mod, figures, multilabel, reporting, summarize, textprep
from .config import PipelineConfig, load_config
from .corpus import Corpus, LabelSource, SurveyKind
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    FingerprintMismatchError,
    LengthMismatchError,
    ModelFormatError,
    SchemaError,
    UXFeedbackError,
    UnknownLabelError,
    VectorParseError,
)
from .util import dump_json, format_rfc3339, parse_rfc3339, slugify

EXIT_OK = 0
EXIT_IO = 1
EXIT_SCHEMA = 2
EXIT_MISMATCH = 3
EXIT_EMPTY = 4
EXIT_VALIDATION = 5


def parse_period(text: str) -> tuple[datetime, datetime]:
    """Period specs: "2023" (year), "2023Q2" (quarter), or
    "<start>..<end>" with RFC 3339 bounds; all half-open [start, end) UTC."""
    text = text.strip()
    if ".." in text:
        start_raw, end_raw = text.split("..", 1)
        return parse_rfc3339(start_raw), parse_rfc3339(end_raw)
    if "Q" in text.upper():
        year_raw, quarter_raw = text.upper().split("Q", 1)
        year, quarter = int(year_raw), int(quarter_raw)
        if not 1 <= quarter <= 4:
            raise ValueError(f"quarter must be 1-4, got {quarter}")
        start_month = 3 * (quarter - 1) + 1
        start = datetime(year, start_month, 1, tzinfo=timezone.utc)
        end = (datetime(year + 1, 1, 1, tzinfo=timezone.utc) if quarter == 4
               else datetime(year, start_month + 3, 1, tzinfo=timezone.utc))
        return start, end
    year = int(text)
    return (datetime(year, 1, 1, tzinfo=timezone.utc),
            datetime(year + 1, 1, 1, tzinfo=timezone.utc))


def _resolve(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


class Workspace:
    """Paths and lazily-built shared objects for one invocation."""

    def __init__(self, cfg: PipelineConfig, base: Path):
        self.cfg = cfg
        self.base = base
        self._embedder: textprep.EmbeddingModel | None = None

    @property
    def comments_path(self) -> Path:
        return _resolve(self.base, self.cfg.paths.comments)

    @property
    def responses_path(self) -> Path | None:
        if self.cfg.paths.responses is None:
            return None
        return _resolve(self.base, self.cfg.paths.responses)

    @property
    def models_dir(self) -> Path:
        return _resolve(self.base, self.cfg.paths.models_dir)

    @property
    def reports_dir(self) -> Path:
        return _resolve(self.base, self.cfg.paths.reports_dir)

    @property
    def bundle_dir(self) -> Path:
        return self.models_dir / "bundle"

    def embedder(self) -> textprep.EmbeddingModel:
        if self._embedder is None:
            self._embedder = self.cfg.build_embedding_model()
        return self._embedder

    def load_corpus(self, apply_period: bool = True) -> Corpus:
        got = corpus_mod.ingest(
            self.comments_path,
            format=self.cfg.paths.format,
            responses_path=self.responses_path,
        )
        if apply_period and self.cfg.period is not None:
            got = got.filter(period=self.cfg.period)
        return got

    def labeled_subset(self, corpus: Corpus) -> tuple[list, list]:
        comments = [c for c in corpus.comments if c.label_source is LabelSource.HUMAN]
        return comments, [c.labels for c in comments]

    def embed(self, comments) -> np.ndarray:
        return textprep.embed_texts(
            [c.classification_text for c in comments], self.embedder(), self.cfg.preprocess
        )


def _data_derived_date(comments) -> str:
    if not comments:
        return "1970-01-01"
    return max(c.timestamp for c in comments).date().isoformat()


# --- commands -------------------------------------------------------------------

def cmd_ingest(ws: Workspace, args) -> int:
    comments_path = Path(args.comments) if args.comments else ws.comments_path
    responses_path = Path(args.responses) if args.responses else ws.responses_path
    got = corpus_mod.ingest(
        comments_path,
        format=args.format or ws.cfg.paths.format,
        responses_path=responses_path,
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        corpus_mod.export(got, out / "comments.jsonl", out / "responses.jsonl")
    print(f"ingested {len(got.comments)} comments, {len(got.responses)} responses")
    return EXIT_OK


def cmd_tune(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    comments, labelsets = ws.labeled_subset(corpus)
    if not comments:
        print("no human-labeled comments to tune on", file=sys.stderr)
        return EXIT_EMPTY
    X = ws.embed(comments)
    result = multilabel.grid_search(X, labelsets, ws.cfg.grid, k=ws.cfg.cv_folds,
                                    seed=ws.cfg.seed)
    ws.models_dir.mkdir(parents=True, exist_ok=True)
    out = ws.models_dir / "best_params.json"
    dump_json(
        {
            "params": result.best_params.to_dict(),
            "cv_folds": result.k,
            "seed": result.seed,
            "excluded_labels": result.excluded_labels,
            "cells": [
                {"params": c.params.to_dict(), "mean_micro_f1": c.mean_micro_f1,
                 "failed": c.failed}
                for c in result.cells
            ],
        },
        out,
    )
    print(f"best mean micro-F1 "
          f"{max(c.mean_micro_f1 for c in result.cells):.4f}; params written to {out}")
    return EXIT_OK


def _training_params(ws: Workspace, args) -> boost.GBTParams:
    params_path = Path(args.params) if getattr(args, "params", None) else (
        ws.models_dir / "best_params.json"
    )
    if params_path.exists():
        data = json.loads(params_path.read_text(encoding="utf-8"))
        return boost.GBTParams(**data["params"])
    return ws.cfg.training


def cmd_train(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    comments, labelsets = ws.labeled_subset(corpus)
    if not comments:
        print("no human-labeled comments to train on", file=sys.stderr)
        return EXIT_EMPTY
    X = ws.embed(comments)
    params = _training_params(ws, args)
    model = multilabel.train_ovr(
        X, labelsets, params, corpus.taxonomy.label_names,
        embedding_fingerprint=ws.embedder().fingerprint(),
        thresholds={name: ws.cfg.threshold for name in corpus.taxonomy.label_names},
        trained_at=_data_derived_date(comments),
        taxonomy_version=corpus.taxonomy.version,
    )
    multilabel.save_bundle(model, ws.bundle_dir)
    print(f"trained on {model.training_size} comments; bundle written to {ws.bundle_dir}")
    return EXIT_OK


def cmd_evaluate(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    comments, truth = ws.labeled_subset(corpus)
    if not comments:
        print("no human-labeled comments to evaluate on", file=sys.stderr)
        return EXIT_EMPTY
    if args.predictions:
        rows = [json.loads(line) for line in Path(args.predictions).read_text().splitlines() if line]
        predictions = [frozenset(r) for r in rows]
        protocol = f"external predictions from {args.predictions}"
    else:
        model = multilabel.load_bundle(ws.bundle_dir,
                                       expected_fingerprint=ws.embedder().fingerprint())
        predictions = multilabel.predict_labelsets(model, ws.embed(comments))
        protocol = "model predictions on the human-labeled pool (in-sample)"
    report = multilabel.evaluate(predictions, truth, corpus.taxonomy.label_names)
    ws.reports_dir.mkdir(parents=True, exist_ok=True)
    out = ws.reports_dir / "evaluation.csv"
    multilabel.export_eval_csv(report, out, protocol=protocol)
    print(f"micro precision {report.micro.precision:.3f} recall {report.micro.recall:.3f} "
          f"f1 {report.micro.f1:.3f}; table written to {out}")
    return EXIT_OK


def cmd_predict(ws: Workspace, args) -> int:
    corpus = ws.load_corpus(apply_period=False)
    model = multilabel.load_bundle(ws.bundle_dir,
                                   expected_fingerprint=ws.embedder().fingerprint())
    pending = [c for c in corpus.comments if c.label_source is LabelSource.UNLABELED]
    if not pending:
        print("predicted labels for 0 comments (nothing unlabeled)")
        return EXIT_OK
    X = ws.embed(pending)
    labelsets = multilabel.predict_labelsets(model, X)
    # an empty prediction is still an annotation event: source becomes model,
    # so a second predict run has nothing left to do
    relabeled = {
        c.id: dataclasses.replace(c, labels=labels, label_source=LabelSource.MODEL)
        for c, labels in zip(pending, labelsets)
    }
    new_comments = tuple(relabeled.get(c.id, c) for c in corpus.comments)
    updated = Corpus(new_comments, corpus.responses, corpus.taxonomy)
    corpus_mod.export(updated, ws.comments_path)
    changed = sum(1 for c_id in relabeled if relabeled[c_id].labels)
    print(f"predicted labels for {len(pending)} comments ({changed} received labels)")
    return EXIT_OK


def cmd_stats(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    kind = SurveyKind(args.survey)
    report = reporting.analyze_survey(corpus, kind, ws.cfg.stats)
    ws.reports_dir.mkdir(parents=True, exist_ok=True)
    stem = f"stats_{kind.value}"
    dump_json(report, ws.reports_dir / f"{stem}.json")
    (ws.reports_dir / f"{stem}.md").write_text(
        reporting.stats_report_markdown(report), encoding="utf-8"
    )
    reporting.write_curves_csv(report["score_curves"], report["score_grid"],
                               ws.reports_dir / f"{stem}_curves.csv")
    metric = "Tutorial quality score" if kind is SurveyKind.TUTORIAL else "UX-Lite score"
    figures.save_cumulative_frequency_figure(
        report["score_curves"], report["score_grid"],
        title=f"Cumulative frequency of the {metric.lower()} by sentiment",
        xlabel=metric,
        path=ws.reports_dir / f"{stem}_curves.png",
    )
    chi2 = report["chi_squared"]
    print(f"chi2 = {chi2['statistic']:.2f} (df {chi2['df']}, p = {chi2['p_value']:.3g}); "
          f"Cramer's V = {report['cramers_v']['point']:.4f}; "
          f"reports under {ws.reports_dir}")
    return EXIT_OK


def _period_tag(period) -> str | None:
    if period is None:
        return None
    return f"{format_rfc3339(period[0])}..{format_rfc3339(period[1])}"


def _summarize_product(ws: Workspace, corpus: Corpus, product: str) -> dict:
    sub = corpus.filter(product=product)
    eligibility = summarize.eligible(sub.comments, ws.cfg.summary)
    entry: dict = {
        "product_id": product,
        "comment_count": len(sub.comments),
        "eligible": eligibility.eligible,
        "categories": list(eligibility.categories),
        "period": _period_tag(ws.cfg.period),
    }
    if not eligibility.eligible:
        entry["skip_reason"] = (
            f"{len(sub.comments)} comments is below the "
            f"{ws.cfg.summary.min_total_comments}-comment minimum"
        )
        return entry
    if not eligibility.categories:
        entry["eligible"] = False
        entry["skip_reason"] = "no category reaches the per-category comment floor"
        return entry
    prompt = summarize.build_prompt(sub.comments, eligibility.categories, ws.cfg.summary)
    draft = summarize.generate(prompt, ws.cfg.summary, embedder=ws.embedder(),
                               preprocess=ws.cfg.preprocess)
    report = summarize.validate(draft, sub, ws.cfg.summary)
    repaired = False
    if not report.clean:
        result = summarize.repair(draft, report, sub)
        draft = result.draft
        report = summarize.validate(draft, sub, ws.cfg.summary)
        repaired = True
    entry["repaired"] = repaired
    entry["clean"] = report.clean
    entry["draft"] = summarize.draft_to_dict(draft)
    entry["validation"] = summarize.report_to_dict(report)
    if report.clean and draft.categories:
        unique_cited = {
            cit.comment_id
            for c in draft.categories for a in c.attributes for cit in a.citations
        }
        snippet_count = min(ws.cfg.summary.snippet_count, len(unique_cited))
        if snippet_count > 0:
            selection = summarize.select_snippets(
                draft, sub, dataclasses.replace(ws.cfg.summary, snippet_count=snippet_count)
            )
            entry["snippets"] = [
                {
                    "id": s.comment_id,
                    "extract": s.extract,
                    "sentiment": s.sentiment.value if s.sentiment else None,
                    "cited_by": s.cited_by,
                }
                for s in selection.snippets
            ]
            entry["balance"] = {
                "corpus_distribution": selection.balance.corpus_distribution,
                "snippet_distribution": selection.balance.snippet_distribution,
                "max_count_deviation": selection.balance.max_count_deviation,
            }
    return entry


def cmd_summarize(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    products = [args.product] if args.product else list(corpus.product_ids)
    out_dir = ws.reports_dir / "summaries"
    out_dir.mkdir(parents=True, exist_ok=True)
    failed = []
    for product in products:
        entry = _summarize_product(ws, corpus, product)
        dump_json(entry, out_dir / f"{slugify(product)}.json")
        if entry.get("eligible") and not entry.get("clean", False):
            failed.append(product)
        status = ("skipped" if not entry["eligible"]
                  else "clean" if entry["clean"] else "FAILED VALIDATION")
        print(f"{product}: {status} ({entry['comment_count']} comments)")
    if failed:
        print(f"summaries failed validation for: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_report(ws: Workspace, args) -> int:
    corpus = ws.load_corpus()
    # trend deltas compare against the prior period, which the period filter
    # would otherwise have removed
    history = ws.load_corpus(apply_period=False) if ws.cfg.period is not None else corpus
    lines = ["# User feedback report", ""]
    if ws.cfg.period is not None:
        start, end = ws.cfg.period
        lines.append(f"Period: {format_rfc3339(start)} to {format_rfc3339(end)} (half-open)")
        lines.append("")

    bundle_manifest = ws.bundle_dir / "manifest.json"
    if bundle_manifest.exists():
        manifest = json.loads(bundle_manifest.read_text(encoding="utf-8"))
        lines.append(
            f"Classifier: version {manifest['version']}, trained {manifest['trained_at']} "
            f"on {manifest['training_size']} comments "
            f"(taxonomy v{manifest['taxonomy_version']}, "
            f"embedding {manifest['embedding_fingerprint']})."
        )
        lines.append("")

    for kind in ("tutorial", "app"):
        stats_md = ws.reports_dir / f"stats_{kind}.md"
        if stats_md.exists():
            lines.append(stats_md.read_text(encoding="utf-8"))

    summaries_dir = ws.reports_dir / "summaries"
    for product in corpus.product_ids:
        sub = corpus.filter(product=product)
        if not sub.comments:
            continue
        lines.append(f"## Product {product}")
        lines.append("")
        shares = sub.label_shares()
        trend = (reporting.label_share_trend(history, ws.cfg.period, product=product)
                 if ws.cfg.period is not None else None)
        lines.append(reporting.label_shares_markdown(shares, trend))
        summary_path = summaries_dir / f"{slugify(product)}.json"
        if not summary_path.exists():
            lines.append("_No summary generated for this product._")
            lines.append("")
            continue
        entry = json.loads(summary_path.read_text(encoding="utf-8"))
        if entry.get("period") != _period_tag(ws.cfg.period):
            # summaries are scoped; a draft from another window is not an
            # integrity failure, it just does not belong in this report
            lines.append("_Summary skipped: generated for a different period; "
                         "rerun summarize with this period._")
            lines.append("")
            continue
        if not entry.get("eligible"):
            lines.append(f"_Summary skipped: {entry.get('skip_reason', 'not eligible')}._")
            lines.append("")
            continue
        draft = summarize.draft_from_dict(entry["draft"])
        report = summarize.validate(draft, sub, ws.cfg.summary)
        if not report.clean or not draft.categories:
            # repair happens in the summarize step; the report only gates
            print(f"refusing to publish summary for {product}: validation not clean",
                  file=sys.stderr)
            return EXIT_VALIDATION
        snippets = tuple(
            summarize.Snippet(
                comment_id=s["id"], extract=s["extract"],
                sentiment=corpus_mod.Sentiment(s["sentiment"]) if s["sentiment"] else None,
                cited_by=s["cited_by"],
            )
            for s in entry.get("snippets", [])
        )
        lines.append(summarize.render_summary_markdown(draft, snippets))

    out = Path(args.out) if args.out else ws.reports_dir / "report.md"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines).rstrip() + "\n", encoding="utf-8")
    print(f"report written to {out}")
    return EXIT_OK


# --- entry point ------------------------------------------------------------------

def cmd_demo(ws: Workspace, args) -> int:
    from .synthdata import write_demo_files

    config_path = write_demo_files(args.out, seed=args.demo_seed)
    print(f"demo corpus and config written; run with --config {config_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uxfeedback",
        description="Survey comment analytics: classification, summaries, statistics.",
    )
    parser.add_argument("--config", help="TOML pipeline configuration file")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallelism bound (results are identical at any value)")
    parser.add_argument("--period", help='period filter: "2023", "2023Q2", or "A..B"')
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="write a synthetic corpus and config for a test drive")
    p.add_argument("--out", default="demo")
    p.add_argument("--demo-seed", type=int, default=7)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("ingest", help="validate and normalize corpus files")
    p.add_argument("--comments")
    p.add_argument("--responses")
    p.add_argument("--format", choices=["jsonl", "csv"])
    p.add_argument("--out", help="write normalized JSONL into this directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("tune", help="grid search over boosting hyperparameters")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="train the one-vs-rest model bundle")
    p.add_argument("--params", help="JSON file with tuned parameters")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate predictions against human labels")
    p.add_argument("--predictions", help="JSONL file with one label array per comment")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="label unlabeled comments with the trained model")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stats", help="run the survey statistics battery")
    p.add_argument("--survey", choices=["tutorial", "app"], required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("summarize", help="generate and validate per-product summaries")
    p.add_argument("--product", help="restrict to one product id")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("report", help="assemble the markdown report bundle")
    p.add_argument("--out", help="output markdown path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            base = Path(args.config).resolve().parent
        else:
            cfg = PipelineConfig()
            base = Path.cwd()
        if args.seed is not None:
            cfg = dataclasses.replace(
                cfg,
                seed=args.seed,
                training=dataclasses.replace(cfg.training, seed=args.seed),
                stats=dataclasses.replace(cfg.stats, seed=args.seed),
                summary=dataclasses.replace(cfg.summary, seed=args.seed),
            )
        if args.period:
            cfg = dataclasses.replace(cfg, period=parse_period(args.period))
        if cfg.seed < 0:
            raise ConfigError("seed must be non-negative")
        ws = Workspace(cfg, base)
        return args.func(ws, args)
    except (SchemaError, DuplicateIdError, UnknownLabelError, ConfigError,
            VectorParseError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (FingerprintMismatchError, LengthMismatchError, DimensionMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except EmptyCorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UXFeedbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
