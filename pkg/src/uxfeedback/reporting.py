"""Survey analysis batteries and report rendering.

Joins survey responses to comment sentiments, runs the full statistics
battery for a survey kind, and renders the results as a JSON-able dict,
markdown, curve CSVs, and figures.

Canonical answer keys: tutorial responses carry "nps" plus any number of
0-10 quality items; app responses carry "psat", "does_what", "easy_to_use".
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from . import stats
from .corpus import Corpus, SurveyKind
from .errors import EmptyCorpusError
from .util import round_half_up

TUTORIAL_GRID = [x / 2.0 for x in range(0, 21)]  # 0.0 .. 10.0
UXLITE_GRID = [float(x) for x in range(0, 101, 5)]  # 0 .. 100


def _joined_responses(corpus: Corpus, kind: SurveyKind):
    for response in corpus.responses:
        if response.survey_kind is not kind or response.comment_id is None:
            continue
        comment = corpus.get(response.comment_id)
        if comment is None or comment.sentiment is None:
            continue
        yield response, comment


def _comment_length_stats(corpus: Corpus) -> dict:
    series = [
        stats.ScoreSeries(
            group=row,
            values=tuple(
                float(len(c.text)) for c in corpus.comments
                if c.sentiment is not None and c.sentiment.display == row
            ),
        )
        for row in stats.SENTIMENT_ROWS
    ]
    return {
        group: {"mean": g.mean, "sd": g.sd, "n": g.n}
        for group, g in stats.group_mean_sd(series).items()
    }


def _interval_dict(estimate: stats.IntervalEstimate) -> dict:
    return estimate.to_dict()


def analyze_tutorial_survey(corpus: Corpus, cfg) -> dict:
    """Sentiment x NPS battery plus tutorial quality score curves."""
    pairs = []
    quality: dict[str, list[float]] = {row: [] for row in stats.SENTIMENT_ROWS}
    for response, comment in _joined_responses(corpus, SurveyKind.TUTORIAL):
        row = comment.sentiment.display
        if "nps" in response.answers:
            pairs.append((row, stats.nps_categorize(response.answers["nps"]).value))
        items = [v for k, v in sorted(response.answers.items()) if k != "nps"]
        if items:
            quality[row].append(stats.tutorial_quality_score(items))
    if not pairs:
        raise EmptyCorpusError("no tutorial responses joined to sentiment-rated comments")
    table = stats.build_contingency(pairs, stats.SENTIMENT_ROWS, stats.NPS_COLUMNS)
    chi2 = stats.chi_squared_test(table)
    v = stats.cramers_v(table)
    v_ci = stats.bootstrap_ci_cramers_v(
        pairs, replicates=cfg.replicates, level=cfg.level, seed=cfg.seed,
        row_labels=stats.SENTIMENT_ROWS, col_labels=stats.NPS_COLUMNS,
    )
    neg = table.row("Negative")
    neg_total = int(neg.sum())
    promoters = int(neg[table.col_labels.index("Promoter")])
    detractors = int(neg[table.col_labels.index("Detractor")])
    series = [stats.ScoreSeries(row, tuple(quality[row])) for row in stats.SENTIMENT_ROWS]
    curves = stats.cumulative_frequency(
        [s for s in series if s.values], TUTORIAL_GRID
    )
    return {
        "survey_kind": "tutorial",
        "n_pairs": len(pairs),
        "contingency": table.to_dict(),
        "chi_squared": chi2.to_dict(),
        "cramers_v": {"point": v, "bootstrap_ci": _interval_dict(v_ci)},
        "conditionals": {
            "promoter_given_negative": {
                "point": promoters / neg_total,
                "wilson_ci": _interval_dict(stats.wilson_interval(promoters, neg_total, cfg.level)),
            },
            "detractor_given_negative": {
                "point": detractors / neg_total,
                "wilson_ci": _interval_dict(stats.wilson_interval(detractors, neg_total, cfg.level)),
            },
        },
        "binomial_test_promoter_given_negative": stats.binomial_test_one_tailed(
            promoters, neg_total, 0.5
        ).to_dict(),
        "score_metric": "tutorial_quality",
        "score_grid": TUTORIAL_GRID,
        "score_curves": curves,
        "score_stats": {
            g: {"mean": s.mean, "sd": s.sd, "n": s.n}
            for g, s in stats.group_mean_sd(series).items()
        },
        "comment_length_stats": _comment_length_stats(corpus),
    }


def analyze_app_survey(corpus: Corpus, cfg) -> dict:
    """Sentiment x PSAT battery plus UX-Lite score curves."""
    pairs = []
    uxlite: dict[str, list[float]] = {row: [] for row in stats.SENTIMENT_ROWS}
    for response, comment in _joined_responses(corpus, SurveyKind.APP):
        row = comment.sentiment.display
        answers = response.answers
        if "psat" in answers:
            pairs.append((row, stats.satisfaction_category(answers["psat"])))
        if "does_what" in answers and "easy_to_use" in answers:
            uxlite[row].append(
                stats.uxlite_score(answers["easy_to_use"], answers["does_what"])
            )
    if not pairs:
        raise EmptyCorpusError("no app responses joined to sentiment-rated comments")
    table = stats.build_contingency(pairs, stats.SENTIMENT_ROWS, stats.SATISFACTION_COLUMNS)
    chi2 = stats.chi_squared_test(table)
    v = stats.cramers_v(table)
    v_ci = stats.bootstrap_ci_cramers_v(
        pairs, replicates=cfg.replicates, level=cfg.level, seed=cfg.seed,
        row_labels=stats.SENTIMENT_ROWS, col_labels=stats.SATISFACTION_COLUMNS,
    )
    satisfied = {"Satisfied", "Very Satisfied"}
    dissatisfied = {"Very Dissatisfied", "Dissatisfied"}

    def any_given(row_name: str) -> dict:
        row = table.row(row_name)
        total = int(row.sum())
        hits = sum(int(row[table.col_labels.index(c)]) for c in satisfied)
        return {
            "point": stats.conditional_probability_any(table, row_name, satisfied),
            "wilson_ci": _interval_dict(stats.wilson_interval(hits, total, cfg.level)),
        }

    series = [stats.ScoreSeries(row, tuple(uxlite[row])) for row in stats.SENTIMENT_ROWS]
    curves = stats.cumulative_frequency([s for s in series if s.values], UXLITE_GRID)
    return {
        "survey_kind": "app",
        "n_pairs": len(pairs),
        "contingency": table.to_dict(),
        "chi_squared": chi2.to_dict(),
        "cramers_v": {"point": v, "bootstrap_ci": _interval_dict(v_ci)},
        "conditionals": {
            "satisfied_given_positive": any_given("Positive"),
            "satisfied_given_negative": any_given("Negative"),
        },
        "satisfaction_gap_pp_given_negative": stats.probability_difference(
            table, "Negative", dissatisfied, satisfied
        ),
        "score_metric": "uxlite",
        "score_grid": UXLITE_GRID,
        "score_curves": curves,
        "score_stats": {
            g: {"mean": s.mean, "sd": s.sd, "n": s.n}
            for g, s in stats.group_mean_sd(series).items()
        },
        "comment_length_stats": _comment_length_stats(corpus),
    }


def analyze_survey(corpus: Corpus, kind: SurveyKind, cfg) -> dict:
    if kind is SurveyKind.TUTORIAL:
        return analyze_tutorial_survey(corpus, cfg)
    return analyze_app_survey(corpus, cfg)


def write_curves_csv(curves: dict[str, list[float]], grid: Sequence[float],
                     path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "x", "cumulative_fraction"])
        for group in curves:
            for x, fraction in zip(grid, curves[group]):
                writer.writerow([group, x, fraction])


def _fmt_ci(ci: dict, percent: bool = False) -> str:
    scale = 100.0 if percent else 1.0
    unit = "%" if percent else ""
    return (f"[{ci['lower'] * scale:.2f}{unit}, {ci['upper'] * scale:.2f}{unit}]"
            f" ({ci['method']}, level {ci['level']:.2f})")


def stats_report_markdown(report: dict) -> str:
    """Human-readable rendering of an analyze_survey() dict."""
    lines = [f"## Survey statistics: {report['survey_kind']}", ""]
    table = report["contingency"]
    header = [""] + table["columns"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row_name, row in zip(table["rows"], table["counts"]):
        lines.append("| " + " | ".join([row_name] + [str(x) for x in row]) + " |")
    lines.append("")
    chi2 = report["chi_squared"]
    lines.append(
        f"- chi-squared: statistic {chi2['statistic']:.2f}, df {chi2['df']}, "
        f"p = {chi2['p_value']:.3g}"
    )
    v = report["cramers_v"]
    lines.append(
        f"- Cramer's V: {v['point']:.4f}, bootstrap CI {_fmt_ci(v['bootstrap_ci'])}"
    )
    for name, entry in report["conditionals"].items():
        pretty = name.replace("_", " ")
        lines.append(
            f"- Pr({pretty}): {entry['point'] * 100:.2f}% "
            f"{_fmt_ci(entry['wilson_ci'], percent=True)}"
        )
    if "binomial_test_promoter_given_negative" in report:
        test = report["binomial_test_promoter_given_negative"]
        lines.append(
            f"- one-tailed binomial test (promoter vs not, given negative): "
            f"p = {test['p_value']:.3f}"
        )
    if "satisfaction_gap_pp_given_negative" in report:
        lines.append(
            f"- satisfaction gap given negative: "
            f"{report['satisfaction_gap_pp_given_negative']:.2f} percentage points"
        )
    lines.append("")
    lines.append(f"Per-sentiment {report['score_metric']} (mean, sd, n):")
    for group, entry in report["score_stats"].items():
        sd = f"{entry['sd']:.2f}" if entry["sd"] is not None else "n/a"
        lines.append(f"- {group}: {entry['mean']:.2f} ({sd}), n={entry['n']}")
    lines.append("")
    return "\n".join(lines)


def label_share_trend(corpus: Corpus, period: tuple, product: str | None = None) -> dict:
    """Per-label share for the period and the immediately preceding period of
    equal length, with the delta in percentage points."""
    start, end = period
    prior = (start - (end - start), start)
    current = corpus.filter(product=product, period=period)
    previous = corpus.filter(product=product, period=prior)
    out: dict[str, dict] = {}
    current_shares = current.label_shares() if current.comments else {}
    prior_shares = previous.label_shares() if previous.comments else {}
    for label in corpus.taxonomy.label_names:
        now = current_shares.get(label)
        before = prior_shares.get(label)
        now_pct = now.share_pct if now else 0.0
        before_pct = before.share_pct if before else 0.0
        out[label] = {
            "current_count": now.count if now else 0,
            "current_share_pct": now_pct,
            "prior_share_pct": before_pct,
            "delta_pp": round_half_up(now_pct - before_pct),
        }
    return out


def label_shares_markdown(shares: dict, trend: dict | None = None) -> str:
    lines = ["| Label | Count | Share |" + (" Delta vs prior |" if trend else "")]
    lines.append("|---|---|---|" + ("---|" if trend else ""))
    for label, share in shares.items():
        row = f"| {label} | {share.count} | {share.share_pct:.2f}% |"
        if trend:
            row += f" {trend[label]['delta_pp']:+.2f} pp |"
        lines.append(row)
    return "\n".join(lines) + "\n"
