"""Acceptance criteria, one test per criterion, each printing a PASS line
with the measured values (run with -s or -rA to see them)."""

import math
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from uxfeedback import boost, cli, multilabel, stats, summarize, textprep
from uxfeedback.corpus import Comment, Corpus, LabelSource, Sentiment, default_taxonomy
from uxfeedback.synthdata import make_signal_corpus, write_demo_files

UTC = timezone.utc

TUTORIAL_TABLE = stats.ContingencyTable(
    stats.SENTIMENT_ROWS, stats.NPS_COLUMNS,
    np.array([[120, 52, 154], [4, 7, 27], [5, 13, 157]]),
)
APP_TABLE = stats.ContingencyTable(
    stats.SENTIMENT_ROWS, stats.SATISFACTION_COLUMNS,
    np.array([
        [893, 826, 548, 539, 106],
        [45, 66, 161, 345, 135],
        [35, 3, 15, 232, 380],
    ]),
)

LABEL_COUNTS = {
    "Usability": 721, "Functionality": 606, "Error": 420, "Other": 352,
    "Performance": 339, "General Feedback": 239, "Help": 207,
    "Visual Design": 114, "Integration": 113, "Licensing": 91,
}
LABEL_SHARES_PCT = {
    "Usability": 26.16, "Functionality": 21.99, "Error": 15.24, "Other": 12.77,
    "Performance": 12.30, "General Feedback": 8.67, "Help": 7.51,
    "Visual Design": 4.14, "Integration": 4.10, "Licensing": 3.30,
}


def table_pairs(table):
    pairs = []
    for i, row in enumerate(table.row_labels):
        for j, col in enumerate(table.col_labels):
            pairs.extend([(row, col)] * int(table.counts[i, j]))
    return pairs


def test_criterion_1_chi_squared_tutorial_table():
    result = stats.chi_squared_test(TUTORIAL_TABLE)
    assert result.statistic == pytest.approx(98.11, abs=0.02)
    assert result.df == 4
    assert 2.3e-20 <= result.p_value <= 2.7e-20
    best = min(
        _timed(lambda: stats.chi_squared_test(TUTORIAL_TABLE)) for _ in range(20)
    )
    assert best < 1e-3, f"chi-squared took {best * 1000:.3f} ms"
    print(f"\nACCEPTANCE 1 PASS chi2={result.statistic:.4f} df={result.df} "
          f"p={result.p_value:.3e} best_runtime={best * 1e6:.0f}us")


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_criterion_2_cramers_v_with_bootstrap():
    v = stats.cramers_v(TUTORIAL_TABLE)
    assert v == pytest.approx(0.3017, abs=0.0005)
    start = time.perf_counter()
    ci = stats.bootstrap_ci_cramers_v(
        table_pairs(TUTORIAL_TABLE), replicates=10_000, level=0.95, seed=42,
        row_labels=stats.SENTIMENT_ROWS, col_labels=stats.NPS_COLUMNS,
    )
    elapsed = time.perf_counter() - start
    assert ci.lower == pytest.approx(0.26, abs=0.01)
    assert ci.upper == pytest.approx(0.35, abs=0.01)
    assert elapsed < 5.0, f"bootstrap took {elapsed:.2f}s"
    print(f"\nACCEPTANCE 2 PASS V={v:.4f} CI=[{ci.lower:.4f},{ci.upper:.4f}] "
          f"runtime={elapsed:.2f}s")


def test_criterion_3_conditionals_and_wilson_intervals():
    promoter = stats.conditional_probability(TUTORIAL_TABLE, "Negative", "Promoter")
    detractor = stats.conditional_probability(TUTORIAL_TABLE, "Negative", "Detractor")
    assert promoter * 100 == pytest.approx(47.24, abs=0.01)
    assert detractor * 100 == pytest.approx(36.81, abs=0.01)
    w1 = stats.wilson_interval(154, 326, 0.95)
    assert w1.lower * 100 == pytest.approx(41.88, abs=0.01)
    assert w1.upper * 100 == pytest.approx(52.66, abs=0.01)
    w2 = stats.wilson_interval(645, 2912, 0.95)
    assert w2.lower * 100 == pytest.approx(20.68, abs=0.01)
    assert w2.upper * 100 == pytest.approx(23.69, abs=0.01)
    print(f"\nACCEPTANCE 3 PASS Pr(Promoter|Neg)={promoter * 100:.2f}% "
          f"Pr(Detractor|Neg)={detractor * 100:.2f}% "
          f"W1=[{w1.lower * 100:.2f},{w1.upper * 100:.2f}]% "
          f"W2=[{w2.lower * 100:.2f},{w2.upper * 100:.2f}]%")


def test_criterion_4_exact_binomial_test():
    result = stats.binomial_test_one_tailed(154, 326, 0.5)
    assert result.p_value == pytest.approx(0.854, abs=0.002)
    print(f"\nACCEPTANCE 4 PASS p={result.p_value:.4f}")


def test_criterion_5_app_survey_battery():
    chi2 = stats.chi_squared_test(APP_TABLE)
    assert chi2.statistic == pytest.approx(1920.1, abs=1.0)
    assert chi2.df == 8
    satisfied = {"Satisfied", "Very Satisfied"}
    share = stats.conditional_probability_any(APP_TABLE, "Positive", satisfied)
    assert share * 100 == pytest.approx(92.0, abs=0.1)
    wilson = stats.wilson_interval(612, 665, 0.95)
    assert wilson.lower * 100 == pytest.approx(89.7, abs=0.1)
    assert wilson.upper * 100 == pytest.approx(93.9, abs=0.1)
    gap = stats.probability_difference(
        APP_TABLE, "Negative", {"Very Dissatisfied", "Dissatisfied"}, satisfied
    )
    assert gap == pytest.approx(36.88, abs=0.01)
    print(f"\nACCEPTANCE 5 PASS chi2={chi2.statistic:.1f} df={chi2.df} "
          f"Pr(Sat|Pos)={share * 100:.2f}% "
          f"CI=[{wilson.lower * 100:.2f},{wilson.upper * 100:.2f}]% gap={gap:.2f}pp")


def _label_share_corpus() -> Corpus:
    # exact per-label counts over 2756 comments; the 446 surplus label slots
    # ride along on Usability comments as second labels
    slots: list[str] = []
    for name, count in LABEL_COUNTS.items():
        slots.extend([name] * count)
    total, n_comments = len(slots), 2756
    surplus = total - n_comments  # 446
    comments = []
    stamp = datetime(2023, 6, 1, tzinfo=UTC)
    for i in range(surplus):
        labels = frozenset({slots[i], slots[n_comments + i]})
        assert len(labels) == 2
        comments.append(Comment(
            id=f"c{i:04d}", product_id="p", timestamp=stamp, text=f"t{i}",
            labels=labels, label_source=LabelSource.HUMAN,
        ))
    for i in range(surplus, n_comments):
        comments.append(Comment(
            id=f"c{i:04d}", product_id="p", timestamp=stamp, text=f"t{i}",
            labels=frozenset({slots[i]}), label_source=LabelSource.HUMAN,
        ))
    return Corpus(tuple(comments), (), default_taxonomy())


def test_criterion_6_label_shares_match_reference_percentages():
    corpus = _label_share_corpus()
    shares = corpus.label_shares()
    for name, expected_pct in LABEL_SHARES_PCT.items():
        assert shares[name].count == LABEL_COUNTS[name]
        assert shares[name].share_pct == expected_pct, name
    print("\nACCEPTANCE 6 PASS all ten shares exact at 2 decimals "
          f"(e.g. Usability={shares['Usability'].share_pct}%)")


def test_criterion_7_classification_substitute_properties():
    start = time.perf_counter()

    # (a) synthetic 500-comment 10-label corpus beats both baselines by >= 0.3
    texts, labelsets = make_signal_corpus(n=500, seed=17)
    model_cfg = textprep.EmbeddingModel(dim=64, bucket_count=100_000, seed=7)
    X = textprep.embed_texts(texts, model_cfg)
    rng = np.random.default_rng(3)
    order = rng.permutation(500)
    train_idx, test_idx = order[:350], order[350:]
    labels = sorted({lab for s in labelsets for lab in s})
    params = boost.GBTParams(learning_rate=0.3, n_rounds=40, max_depth=3)
    ovr = multilabel.train_ovr(
        X[train_idx], [labelsets[i] for i in train_idx], params, labels
    )
    predicted = multilabel.predict_labelsets(ovr, X[test_idx])
    truth = [labelsets[i] for i in test_idx]
    model_f1 = multilabel.evaluate(predicted, truth, labels).micro.f1

    empty_f1 = multilabel.evaluate([frozenset()] * len(truth), truth, labels).micro.f1
    prevalence = sum(len(s) for s in labelsets) / (500 * len(labels))
    coin = np.random.default_rng(4)
    random_preds = [
        frozenset(lab for lab in labels if coin.random() < prevalence)
        for _ in truth
    ]
    random_f1 = multilabel.evaluate(random_preds, truth, labels).micro.f1
    assert model_f1 >= empty_f1 + 0.3
    assert model_f1 >= random_f1 + 0.3

    # (b) evaluate() equals brute-force confusion enumeration, 200 instances
    gen = np.random.default_rng(5)
    small_labels = ["A", "B", "C", "D"]
    for _ in range(200):
        n = int(gen.integers(1, 11))
        preds = [frozenset(lab for lab in small_labels if gen.random() < 0.35)
                 for _ in range(n)]
        actual = [frozenset(lab for lab in small_labels if gen.random() < 0.35)
                  for _ in range(n)]
        report = multilabel.evaluate(preds, actual, small_labels)
        tp = fp = fn = 0
        for p, t in zip(preds, actual):
            for lab in small_labels:
                if lab in p and lab in t:
                    tp += 1
                elif lab in p:
                    fp += 1
                elif lab in t:
                    fn += 1
        expected = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
        assert report.micro.f1 == pytest.approx(expected, abs=1e-12)

    # (c) training loss non-increasing with gamma = alpha = 0, 20 datasets
    gen = np.random.default_rng(6)
    for _ in range(20):
        n, d = int(gen.integers(20, 60)), int(gen.integers(1, 4))
        Xc = gen.standard_normal((n, d))
        yc = (gen.random(n) < 0.45).astype(float)
        if yc.min() == yc.max():
            yc[0] = 1.0 - yc[0]
        curve = boost.training_loss_curve(boost.train_binary(
            Xc, yc,
            boost.GBTParams(learning_rate=0.4, n_rounds=10, max_depth=2,
                            min_loss_reduction=0.0, l1_weight=0.0, l2_weight=1.0),
        ))
        assert all(b <= a + 1e-12 for a, b in zip(curve, curve[1:]))

    # (d) depth-1 single-round trainer matches the exhaustive split oracle
    gen = np.random.default_rng(7)
    for _ in range(50):
        n, d = int(gen.integers(4, 21)), int(gen.integers(1, 3))
        Xo = gen.standard_normal((n, d))
        yo = (gen.random(n) < 0.5).astype(float)
        if yo.min() == yo.max():
            yo[0] = 1.0 - yo[0]
        l2 = 1.0
        trained = boost.train_binary(
            Xo, yo, boost.GBTParams(learning_rate=1.0, n_rounds=1, max_depth=1,
                                    l2_weight=l2, min_loss_reduction=0.0),
        ).trees[0]
        g = 0.5 - yo
        h = np.full(n, 0.25)
        G, H = math.fsum(g), math.fsum(h)
        best = (-np.inf, None, None)
        for j in range(d):
            values = np.unique(Xo[:, j])
            for lo, hi in zip(values[:-1], values[1:]):
                thr = (lo + hi) / 2.0
                mask = Xo[:, j] < thr
                GL, HL = math.fsum(g[mask]), math.fsum(h[mask])
                GR, HR = G - GL, H - HL
                gain = 0.5 * (GL * GL / (HL + l2) + GR * GR / (HR + l2)
                              - G * G / (H + l2))
                if gain > best[0]:
                    best = (gain, j, thr)
        if best[0] <= 0:
            assert trained.n_leaves == 1
        else:
            assert trained.feature[0] == best[1]
            assert trained.threshold[0] == pytest.approx(best[2], rel=1e-12)

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"criterion 7 took {elapsed:.1f}s"
    print(f"\nACCEPTANCE 7 PASS micro_f1={model_f1:.3f} "
          f"(empty={empty_f1:.3f}, random={random_f1:.3f}); "
          f"200 evaluate oracles, 20 loss curves, 50 split oracles; "
          f"runtime={elapsed:.1f}s")


def test_criterion_8_stratification_bound_on_100_instances():
    rng = np.random.default_rng(2025)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(12, 100))
        k = int(rng.integers(2, 6))
        label_pool = [f"L{j}" for j in range(int(rng.integers(2, 8)))]
        sets = []
        for _ in range(n):
            m = rng.binomial(len(label_pool), 0.25)
            sets.append(frozenset(rng.choice(label_pool, size=m, replace=False).tolist()))
        assignment = multilabel.stratified_kfold(sets, k, seed=trial)
        freq: dict[str, int] = {}
        for s in sets:
            for lab in s:
                freq[lab] = freq.get(lab, 0) + 1
        for lab, f in freq.items():
            if f < k:
                continue
            counts = np.zeros(k, dtype=int)
            for i, s in enumerate(sets):
                if lab in s:
                    counts[assignment.folds[i]] += 1
            assert counts.min() >= f // k, (trial, lab, counts)
            assert counts.max() <= -(-f // k), (trial, lab, counts)
            checked += 1
    print(f"\nACCEPTANCE 8 PASS {checked} label/fold bounds verified over 100 instances")


def _mutation_corpus_and_draft():
    comments = []
    for i in range(30):
        label = ("Usability", "Error", "Help")[i % 3]
        comments.append(Comment(
            id=f"m{i:03d}", product_id="p",
            timestamp=datetime(2023, 5, 1, tzinfo=UTC),
            text=f"distinct comment body number {i} about {label.lower()}",
            sentiment=Sentiment.NEGATIVE, labels=frozenset({label}),
            label_source=LabelSource.MODEL,
        ))
    corpus = Corpus(tuple(comments), (), default_taxonomy())
    attributes = {"Usability": [], "Error": [], "Help": []}
    for c in comments:
        label = next(iter(c.labels))
        attributes[label].append(summarize.Attribute(
            statement=c.text, citations=(summarize.Citation(c.id, c.text),),
        ))
    draft = summarize.SummaryDraft(
        categories=tuple(
            summarize.CategorySummary(cat, tuple(attrs))
            for cat, attrs in attributes.items()
        ),
        source_comment_count=30,
    )
    return corpus, draft


def test_criterion_9_summarizer_gates_and_mutation_detection():
    config = summarize.SummaryConfig()

    # 19-comment product skipped
    corpus19, _ = _mutation_corpus_and_draft()
    small = Corpus(corpus19.comments[:19], (), corpus19.taxonomy)
    assert not summarize.eligible(small.comments, config).eligible

    # 3-comment category excluded at threshold 4
    mixed = []
    for i in range(17):
        mixed.append(Comment(
            id=f"u{i:02d}", product_id="p", timestamp=datetime(2023, 5, 1, tzinfo=UTC),
            text=f"usability note {i}", labels=frozenset({"Usability"}),
            label_source=LabelSource.MODEL,
        ))
    for i in range(3):
        mixed.append(Comment(
            id=f"h{i:02d}", product_id="p", timestamp=datetime(2023, 5, 1, tzinfo=UTC),
            text=f"help note {i}", labels=frozenset({"Help"}),
            label_source=LabelSource.MODEL,
        ))
    elig = summarize.eligible(mixed, config)
    assert elig.eligible
    assert "Help" not in elig.categories

    # 100 distinct single mutations, every one caught and excluded
    corpus, draft = _mutation_corpus_and_draft()
    assert summarize.validate(draft, corpus, config).clean
    citation_paths = [
        (ci, ai)
        for ci, cat in enumerate(draft.categories)
        for ai, _ in enumerate(cat.attributes)
    ]
    caught = 0
    for m in range(100):
        ci, ai = citation_paths[m % len(citation_paths)]
        cat = draft.categories[ci]
        attr = cat.attributes[ai]
        old = attr.citations[0]
        if m % 2 == 0:
            mutated_citation = replace(old, extract=old.extract + f" fabricated{m}")
        else:
            mutated_citation = replace(old, comment_id=f"ghost-{m}")
        mutated_attr = replace(attr, citations=(mutated_citation,))
        mutated_cat = replace(
            cat, attributes=cat.attributes[:ai] + (mutated_attr,) + cat.attributes[ai + 1:]
        )
        mutated = replace(
            draft,
            categories=draft.categories[:ci] + (mutated_cat,) + draft.categories[ci + 1:],
        )
        report = summarize.validate(mutated, corpus, config)
        assert not report.clean, f"mutation {m} slipped through"
        caught += 1
    assert caught == 100
    print(f"\nACCEPTANCE 9 PASS 19-comment skip, 3-comment category cut, "
          f"{caught}/100 mutations caught")


def _run_pipeline(directory: Path) -> None:
    config = str(directory / "pipeline.toml")
    for command in (["ingest"], ["train"], ["predict"], ["evaluate"],
                    ["stats", "--survey", "tutorial"], ["stats", "--survey", "app"],
                    ["summarize"], ["report"]):
        rc = cli.main(["--config", config] + command)
        assert rc == 0, (command, rc)


def test_criterion_10_byte_identical_pipeline_runs(tmp_path):
    run_a, run_b = tmp_path / "a", tmp_path / "b"
    write_demo_files(run_a)
    write_demo_files(run_b)
    _run_pipeline(run_a)
    _run_pipeline(run_b)
    compared = 0
    for rel in sorted(
        str(p.relative_to(run_a)) for p in (run_a / "models").rglob("*") if p.is_file()
    ):
        assert (run_a / rel).read_bytes() == (run_b / rel).read_bytes(), rel
        compared += 1
    for rel in ("reports/stats_tutorial.json", "reports/stats_app.json",
                "reports/report.md"):
        assert (run_a / rel).read_bytes() == (run_b / rel).read_bytes(), rel
        compared += 1
    print(f"\nACCEPTANCE 10 PASS {compared} artifacts byte-identical across runs")
