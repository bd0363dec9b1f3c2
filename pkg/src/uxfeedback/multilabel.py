"""One-vs-rest multi-label classification over comment embeddings.

Covers fold assignment (iterative stratification), grid search maximizing
micro-averaged F1, per-label training with decision thresholds, evaluation
against human labels, and batch retraining from corrected corpora.
"""

from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import boost
from .errors import (
    FingerprintMismatchError,
    InvalidKError,
    LengthMismatchError,
    ModelFormatError,
    UnknownLabelError,
)
from .util import percent_share, slugify

LabelSet = frozenset[str]

_BUNDLE_TAG = "ovr-bundle-v1"


# --- fold assignment ----------------------------------------------------------

@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: np.ndarray  # fold index per example

    def __post_init__(self) -> None:
        self.folds.flags.writeable = False

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train_indices, validation_indices) for one fold."""
        val = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, val


def _label_fold_counts(labelsets: Sequence[LabelSet], folds: np.ndarray, k: int) -> dict[str, np.ndarray]:
    counts: dict[str, np.ndarray] = {}
    for i, labels in enumerate(labelsets):
        for lab in labels:
            if lab not in counts:
                counts[lab] = np.zeros(k, dtype=int)
            counts[lab][folds[i]] += 1
    return counts


def _rebalance(labelsets: Sequence[LabelSet], folds: np.ndarray, k: int,
               max_moves: int = 20000, move_budget: int = 4) -> None:
    """Bounded repair: move or swap examples between folds until every label
    with frequency >= k sits within [floor(f/k), ceil(f/k)] per fold. Greedy
    stratification alone gets close, but multi-label side effects can push a
    fold one past the bound. Each step fixes one unit of the worst label's
    imbalance, choosing over all donor/recipient folds (and swaps when plain
    moves would hurt other labels) the option with the least collateral
    damage; a per-example budget breaks oscillation."""
    n = len(labelsets)
    freq: dict[str, int] = {}
    for labels in labelsets:
        for lab in labels:
            freq[lab] = freq.get(lab, 0) + 1
    targets = sorted((lab for lab, f in freq.items() if f >= k),
                     key=lambda lab: (freq[lab], lab))
    if not targets:
        return
    bounds = {lab: (freq[lab] // k, -(-freq[lab] // k)) for lab in targets}
    counts = {lab: np.zeros(k, dtype=int) for lab in targets}
    for i, labels in enumerate(labelsets):
        for lab in labels:
            if lab in counts:
                counts[lab][folds[i]] += 1
    moves_left = np.full(n, move_budget, dtype=int)

    def fold_violation(lab: str, fold: int) -> int:
        lo, hi = bounds[lab]
        c = int(counts[lab][fold])
        return max(0, c - hi) + max(0, lo - c)

    def transfer_damage(i: int, skip: str | None, src: int, dst: int) -> int:
        # change in other labels' violations if example i moves src -> dst
        delta = 0
        for m in labelsets[i]:
            if m == skip or m not in counts:
                continue
            before = fold_violation(m, src) + fold_violation(m, dst)
            counts[m][src] -= 1
            counts[m][dst] += 1
            delta += fold_violation(m, src) + fold_violation(m, dst) - before
            counts[m][src] += 1
            counts[m][dst] -= 1
        return delta

    def apply_transfer(i: int, src: int, dst: int) -> None:
        folds[i] = dst
        moves_left[i] -= 1
        for m in labelsets[i]:
            if m in counts:
                counts[m][src] -= 1
                counts[m][dst] += 1

    for _ in range(max_moves):
        offender = next(
            (lab for lab in targets
             if counts[lab].max() > bounds[lab][1] or counts[lab].min() < bounds[lab][0]),
            None,
        )
        if offender is None:
            _balance_fold_sizes(labelsets, folds, k, counts, bounds)
            return
        lo, hi = bounds[offender]
        c = counts[offender]
        over = [f for f in range(k) if c[f] > hi]
        under = [f for f in range(k) if c[f] < lo]
        donors = over or [f for f in range(k) if c[f] > lo]
        recipients = under or [f for f in range(k) if c[f] < hi]
        by_fold: dict[int, list[int]] = {f: [] for f in range(k)}
        for i in range(n):
            by_fold[folds[i]].append(i)

        best_key: tuple | None = None
        best_action: tuple | None = None  # (i, src, dst, swap_j)
        for src in donors:
            movable = [i for i in by_fold[src] if offender in labelsets[i] and moves_left[i] > 0]
            for dst in recipients:
                for i in movable:
                    d = transfer_damage(i, offender, src, dst)
                    key = (d, 0, len(labelsets[i]), i, src, dst)
                    if best_key is None or key < best_key:
                        best_key = key
                        best_action = (i, src, dst, None)
        if best_key is None or best_key[0] > 0:
            # plain moves all hurt some other label: look for a swap partner
            for src in donors:
                movable = [i for i in by_fold[src] if offender in labelsets[i] and moves_left[i] > 0]
                for dst in recipients:
                    partners = [j for j in by_fold[dst]
                                if offender not in labelsets[j] and moves_left[j] > 0]
                    for i in movable:
                        base = transfer_damage(i, offender, src, dst)
                        for j in partners:
                            d = base + transfer_damage(j, None, dst, src)
                            key = (d, 1, len(labelsets[i]) + len(labelsets[j]), i, src, dst, j)
                            if best_key is None or key < best_key:
                                best_key = key
                                best_action = (i, src, dst, j)
        if best_action is None:
            _balance_fold_sizes(labelsets, folds, k, counts, bounds)
            return  # nothing movable under the budget; leave as is
        i, src, dst, swap_j = best_action
        apply_transfer(i, src, dst)
        if swap_j is not None:
            apply_transfer(swap_j, dst, src)
    _balance_fold_sizes(labelsets, folds, k, counts, bounds)


def _balance_fold_sizes(labelsets: Sequence[LabelSet], folds: np.ndarray, k: int,
                        counts: dict[str, np.ndarray],
                        bounds: dict[str, tuple[int, int]]) -> None:
    """Move examples from the largest fold to the smallest whenever doing so
    keeps every bounded label inside its [lo, hi] window; stops at a size
    spread of 1 or when no safe move remains."""
    sizes = np.bincount(folds, minlength=k)
    for _ in range(len(labelsets)):
        big = int(np.argmax(sizes))
        small = int(np.argmin(sizes))
        if sizes[big] - sizes[small] <= 1:
            return
        chosen = None
        for i in range(len(labelsets)):
            if folds[i] != big:
                continue
            safe = all(
                counts[m][big] > bounds[m][0] and counts[m][small] < bounds[m][1]
                for m in labelsets[i] if m in counts
            )
            if safe and (chosen is None or (len(labelsets[i]), i) < (len(labelsets[chosen]), chosen)):
                chosen = i
        if chosen is None:
            return
        folds[chosen] = small
        sizes[big] -= 1
        sizes[small] += 1
        for m in labelsets[chosen]:
            if m in counts:
                counts[m][big] -= 1
                counts[m][small] += 1


def _assignment_score(sets: Sequence[LabelSet], folds: np.ndarray, k: int) -> tuple[int, int]:
    """(label bound violations, fold size spread beyond 1); (0, 0) is ideal."""
    freq: dict[str, int] = {}
    for labels in sets:
        for lab in labels:
            freq[lab] = freq.get(lab, 0) + 1
    total = 0
    for lab, f in freq.items():
        if f < k:
            continue
        counts = np.zeros(k, dtype=int)
        for i, labels in enumerate(sets):
            if lab in labels:
                counts[folds[i]] += 1
        lo, hi = f // k, -(-f // k)
        total += int(np.maximum(counts - hi, 0).sum() + np.maximum(lo - counts, 0).sum())
    sizes = np.bincount(folds, minlength=k)
    return total, max(0, int(sizes.max() - sizes.min()) - 1)


def stratified_kfold(labelsets: Sequence[Iterable[str]], k: int, seed: int = 0,
                     restarts: int = 25) -> FoldAssignment:
    """Iterative stratification: repeatedly take the label with the fewest
    unassigned examples and place each of its examples into the fold with the
    greatest remaining demand for that label, then repair residual imbalance.
    The local search can plateau on heavily co-labeled data, so the whole
    assignment restarts with a derived seed until every label with frequency
    >= k is within +-1 of its proportional share. Deterministic given seed."""
    sets: list[LabelSet] = [frozenset(s) for s in labelsets]
    n = len(sets)
    if k < 2 or k > n:
        raise InvalidKError(f"k={k} is not usable for {n} examples")
    best_folds: np.ndarray | None = None
    best_score: tuple[int, int] | None = None
    for attempt in range(restarts):
        folds = _stratify_once(sets, k, np.random.SeedSequence([seed, attempt]))
        score = _assignment_score(sets, folds, k)
        if best_score is None or score < best_score:
            best_folds, best_score = folds, score
        if score == (0, 0):
            break
    assert best_folds is not None
    return FoldAssignment(k=k, folds=best_folds)


def _stratify_once(sets: list[LabelSet], k: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    n = len(sets)
    rng = np.random.default_rng(seed_seq)
    folds = np.full(n, -1, dtype=int)

    freq: dict[str, int] = {}
    for labels in sets:
        for lab in labels:
            freq[lab] = freq.get(lab, 0) + 1
    desire = {lab: np.full(k, f / k) for lab, f in freq.items()}
    caps = {lab: -(-f // k) for lab, f in freq.items()}
    placed = {lab: np.zeros(k, dtype=int) for lab in freq}
    capacity = np.full(k, n / k)
    remaining: dict[str, set[int]] = {lab: set() for lab in freq}
    for i, labels in enumerate(sets):
        for lab in labels:
            remaining[lab].add(i)

    def assign(i: int, fold: int) -> None:
        folds[i] = fold
        capacity[fold] -= 1
        for lab in sets[i]:
            remaining[lab].discard(i)
            desire[lab][fold] -= 1
            placed[lab][fold] += 1

    while True:
        active = [(len(idx), lab) for lab, idx in remaining.items() if idx]
        if not active:
            break
        _, current = min(active)
        examples = sorted(remaining[current])
        rng.shuffle(examples)
        for i in examples:
            want = desire[current]
            # avoid folds that any of this example's labels have already filled
            allowed = np.ones(k, dtype=bool)
            for lab in sets[i]:
                allowed &= placed[lab] < caps[lab]
            pool = np.flatnonzero(allowed) if allowed.any() else np.arange(k)
            best = pool[want[pool] == want[pool].max()]
            if len(best) > 1:
                sub = capacity[best]
                best = best[sub == sub.max()]
            fold = int(best[0]) if len(best) == 1 else int(best[rng.integers(len(best))])
            assign(i, fold)

    unassigned = [i for i in range(n) if folds[i] < 0]
    rng.shuffle(unassigned)
    for i in unassigned:
        best = np.flatnonzero(capacity == capacity.max())
        assign(i, int(best[0]))

    _rebalance(sets, folds, k)
    return folds


# --- hyperparameter grid --------------------------------------------------------

@dataclass(frozen=True)
class ParamGrid:
    learning_rate: tuple[float, ...] = (0.05, 0.1, 0.3)
    max_depth: tuple[int, ...] = (3, 5, 7)
    min_loss_reduction: tuple[float, ...] = (0.0, 1.0)
    l2_weight: tuple[float, ...] = (1.0, 10.0)
    l1_weight: tuple[float, ...] = (0.0, 1.0)
    n_rounds: tuple[int, ...] = (100, 300)
    base: boost.GBTParams = field(default_factory=boost.GBTParams)

    def __post_init__(self) -> None:
        for name in ("learning_rate", "max_depth", "min_loss_reduction",
                     "l2_weight", "l1_weight", "n_rounds"):
            if not getattr(self, name):
                raise ValueError(f"grid axis {name} must be non-empty")

    def cells(self) -> list[boost.GBTParams]:
        out = []
        for lr, depth, gamma, l2, l1, rounds in itertools.product(
            self.learning_rate, self.max_depth, self.min_loss_reduction,
            self.l2_weight, self.l1_weight, self.n_rounds,
        ):
            out.append(replace(
                self.base, learning_rate=lr, max_depth=depth,
                min_loss_reduction=gamma, l2_weight=l2, l1_weight=l1,
                n_rounds=rounds,
            ))
        return out


@dataclass
class GridCellResult:
    params: boost.GBTParams
    mean_micro_f1: float
    fold_micro_f1: list[float]
    failed: bool = False


@dataclass
class GridSearchResult:
    best_params: boost.GBTParams
    cells: list[GridCellResult]
    k: int
    seed: int
    excluded_labels: list[str]


# --- one-vs-rest model -----------------------------------------------------------

@dataclass
class LabelHead:
    model: boost.GBTModel
    threshold: float = 0.5
    positives: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError(f"decision threshold must be in [0, 1), got {self.threshold}")


@dataclass
class OneVsRestModel:
    heads: dict[str, LabelHead]
    taxonomy_version: int
    embedding_fingerprint: str
    training_size: int
    trained_at: str
    version: int = 1


@dataclass(frozen=True)
class Prediction:
    labels: frozenset[str]
    probabilities: dict[str, float]


def _micro_f1_from_counts(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def train_ovr(
    vectors: np.ndarray,
    labelsets: Sequence[Iterable[str]],
    params: boost.GBTParams,
    label_names: Sequence[str],
    embedding_fingerprint: str = "",
    thresholds: dict[str, float] | None = None,
    trained_at: str = "",
    version: int = 1,
    taxonomy_version: int = 1,
) -> OneVsRestModel:
    """One binary model per label; the target for a label is membership of
    that label in each example's labelset. Labels without positive examples
    get a base-rate head that never fires at its threshold (warned)."""
    X = np.asarray(vectors, dtype=float)
    sets = [frozenset(s) for s in labelsets]
    if len(X) != len(sets):
        raise LengthMismatchError(f"{len(X)} vectors vs {len(sets)} labelsets")
    for labels in sets:
        stray = labels - set(label_names)
        if stray:
            raise UnknownLabelError(sorted(stray)[0])
    heads: dict[str, LabelHead] = {}
    for name in label_names:
        y = np.array([1.0 if name in s else 0.0 for s in sets])
        positives = int(y.sum())
        if positives == 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = boost.train_binary(X, y, params)
            warnings.warn(f"label {name!r} has no positive examples; it will never be predicted",
                          stacklevel=2)
        else:
            model = boost.train_binary(X, y, params)
        threshold = (thresholds or {}).get(name, 0.5)
        heads[name] = LabelHead(model=model, threshold=threshold, positives=positives)
    return OneVsRestModel(
        heads=heads,
        taxonomy_version=taxonomy_version,
        embedding_fingerprint=embedding_fingerprint,
        training_size=len(sets),
        trained_at=trained_at,
        version=version,
    )


def predict_labels(
    model: OneVsRestModel,
    vector: np.ndarray,
    embedding_fingerprint: str | None = None,
) -> Prediction:
    """Labels whose probability reaches their threshold (>= rule); the empty
    set is a valid outcome."""
    if (
        embedding_fingerprint is not None
        and model.embedding_fingerprint
        and embedding_fingerprint != model.embedding_fingerprint
    ):
        raise FingerprintMismatchError(
            f"model expects embedding {model.embedding_fingerprint}, got {embedding_fingerprint}"
        )
    probabilities = {
        name: boost.predict_proba(head.model, vector) for name, head in model.heads.items()
    }
    chosen = frozenset(
        name for name, p in probabilities.items() if p >= model.heads[name].threshold
    )
    return Prediction(labels=chosen, probabilities=probabilities)


def predict_labelsets(model: OneVsRestModel, X: np.ndarray) -> list[LabelSet]:
    X = np.asarray(X, dtype=float)
    per_label = {
        name: boost.predict_proba_batch(head.model, X) >= head.threshold
        for name, head in model.heads.items()
    }
    return [
        frozenset(name for name in model.heads if per_label[name][i])
        for i in range(len(X))
    ]


# --- evaluation -------------------------------------------------------------------

@dataclass(frozen=True)
class LabelMetrics:
    count: int
    share_pct: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    zero_division: bool = False


@dataclass(frozen=True)
class MicroMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    per_label: dict[str, LabelMetrics]
    micro: MicroMetrics
    n_examples: int


def evaluate(
    predictions: Sequence[Iterable[str]],
    truth: Sequence[Iterable[str]],
    label_names: Sequence[str],
) -> EvalReport:
    """Per-label precision/recall/F1 from set membership; micro metrics from
    TP/FP/FN summed across labels. Zero-denominator metrics report 0 and are
    flagged."""
    if len(predictions) != len(truth):
        raise LengthMismatchError(f"{len(predictions)} predictions vs {len(truth)} truth sets")
    pred_sets = [frozenset(p) for p in predictions]
    true_sets = [frozenset(t) for t in truth]
    per_label: dict[str, LabelMetrics] = {}
    total_tp = total_fp = total_fn = 0
    n = len(true_sets)
    for name in label_names:
        tp = sum(1 for p, t in zip(pred_sets, true_sets) if name in p and name in t)
        fp = sum(1 for p, t in zip(pred_sets, true_sets) if name in p and name not in t)
        fn = sum(1 for p, t in zip(pred_sets, true_sets) if name not in p and name in t)
        count = tp + fn
        zero = (tp + fp == 0) or (tp + fn == 0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_label[name] = LabelMetrics(
            count=count,
            share_pct=percent_share(count, n) if n else 0.0,
            precision=precision, recall=recall, f1=f1,
            tp=tp, fp=fp, fn=fn, zero_division=zero,
        )
        total_tp += tp
        total_fp += fp
        total_fn += fn
    micro_p = total_tp / (total_tp + total_fp) if total_tp + total_fp else 0.0
    micro_r = total_tp / (total_tp + total_fn) if total_tp + total_fn else 0.0
    micro = MicroMetrics(
        precision=micro_p,
        recall=micro_r,
        f1=_micro_f1_from_counts(total_tp, total_fp, total_fn),
        tp=total_tp, fp=total_fp, fn=total_fn,
    )
    return EvalReport(per_label=per_label, micro=micro, n_examples=n)


def eval_report_rows(report: EvalReport) -> list[list[str]]:
    """Rows in report-table layout: label, count, share, precision, recall, f1."""
    rows = []
    order = sorted(report.per_label, key=lambda L: (-report.per_label[L].count, L))
    for name in order:
        m = report.per_label[name]
        rows.append([
            name, str(m.count), f"{m.share_pct:.2f}%",
            f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}",
        ])
    rows.append([
        "micro", str(report.n_examples), "",
        f"{report.micro.precision:.2f}", f"{report.micro.recall:.2f}", f"{report.micro.f1:.2f}",
    ])
    return rows


def export_eval_csv(report: EvalReport, path: str | Path, protocol: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "count", "share", "precision", "recall", "f1"])
        for row in eval_report_rows(report):
            writer.writerow(row)
        if protocol:
            writer.writerow(["# protocol", protocol, "", "", "", ""])


# --- grid search ---------------------------------------------------------------

def grid_search(
    vectors: np.ndarray,
    labelsets: Sequence[Iterable[str]],
    grid: ParamGrid,
    k: int,
    seed: int = 0,
) -> GridSearchResult:
    """Evaluate every cell with the same k folds; the winner maximizes mean
    micro-F1, ties broken by smaller n_rounds, then smaller max_depth, then
    grid order. A cell that fails on any fold scores 0 and is flagged.
    Labels with fewer than 2 positives are excluded from CV scoring."""
    X = np.asarray(vectors, dtype=float)
    sets = [frozenset(s) for s in labelsets]
    if len(X) != len(sets):
        raise LengthMismatchError(f"{len(X)} vectors vs {len(sets)} labelsets")
    freq: dict[str, int] = {}
    for labels in sets:
        for lab in labels:
            freq[lab] = freq.get(lab, 0) + 1
    scored_labels = sorted(lab for lab, f in freq.items() if f >= 2)
    excluded = sorted(lab for lab, f in freq.items() if f < 2)
    if excluded:
        warnings.warn(f"labels excluded from CV scoring (fewer than 2 positives): {excluded}",
                      stacklevel=2)
    assignment = stratified_kfold(sets, k, seed)

    cells: list[GridCellResult] = []
    best_key: tuple | None = None
    best_params: boost.GBTParams | None = None
    for params in grid.cells():
        fold_scores: list[float] = []
        failed = False
        try:
            for fold in range(k):
                train_idx, val_idx = assignment.split(fold)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    model = train_ovr(
                        X[train_idx], [sets[i] for i in train_idx], params,
                        label_names=scored_labels,
                    )
                predicted = predict_labelsets(model, X[val_idx])
                actual = [sets[i] & frozenset(scored_labels) for i in val_idx]
                report = evaluate(predicted, actual, scored_labels)
                fold_scores.append(report.micro.f1)
        except Exception:
            failed = True
            fold_scores = []
        mean_f1 = float(np.mean(fold_scores)) if fold_scores else 0.0
        if failed:
            mean_f1 = 0.0
        cells.append(GridCellResult(params=params, mean_micro_f1=mean_f1,
                                    fold_micro_f1=fold_scores, failed=failed))
        key = (mean_f1, -params.n_rounds, -params.max_depth)
        if best_key is None or key > best_key:
            best_key = key
            best_params = params
    assert best_params is not None
    return GridSearchResult(best_params=best_params, cells=cells, k=k, seed=seed,
                            excluded_labels=excluded)


# --- retraining -------------------------------------------------------------------

def retrain(
    model: OneVsRestModel,
    vectors: np.ndarray,
    labelsets: Sequence[Iterable[str]],
    params: boost.GBTParams,
    label_names: Sequence[str],
    taxonomy_version: int,
    trained_at: str,
) -> OneVsRestModel:
    """Full batch retrain on the human-labeled pool (no incremental tree
    patching); the new model records its training size, date, and a bumped
    version."""
    return train_ovr(
        vectors, labelsets, params, label_names,
        embedding_fingerprint=model.embedding_fingerprint,
        thresholds={name: head.threshold for name, head in model.heads.items()},
        trained_at=trained_at,
        version=model.version + 1,
        taxonomy_version=taxonomy_version,
    )


# --- bundle persistence ---------------------------------------------------------

def save_bundle(model: OneVsRestModel, directory: str | Path) -> None:
    """Model bundle: manifest plus one model file per label."""
    directory = Path(directory)
    (directory / "models").mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": _BUNDLE_TAG,
        "taxonomy_version": model.taxonomy_version,
        "embedding_fingerprint": model.embedding_fingerprint,
        "training_size": model.training_size,
        "trained_at": model.trained_at,
        "version": model.version,
        "labels": {
            name: {
                "file": f"models/{slugify(name)}.json",
                "threshold": head.threshold,
                "positives": head.positives,
            }
            for name, head in model.heads.items()
        },
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name, head in model.heads.items():
        boost.save_model(head.model, directory / "models" / f"{slugify(name)}.json",
                         embedding_fingerprint=model.embedding_fingerprint)


def load_bundle(directory: str | Path, expected_fingerprint: str | None = None) -> OneVsRestModel:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format") != _BUNDLE_TAG:
        raise ModelFormatError(f"unknown bundle format {manifest.get('format')!r}")
    stored = manifest.get("embedding_fingerprint", "")
    if expected_fingerprint is not None and stored and stored != expected_fingerprint:
        raise FingerprintMismatchError(
            f"bundle was trained with embedding {stored}, expected {expected_fingerprint}"
        )
    heads = {}
    for name, entry in manifest["labels"].items():
        gbt = boost.load_model(directory / entry["file"])
        heads[name] = LabelHead(model=gbt, threshold=entry["threshold"],
                                positives=entry["positives"])
    return OneVsRestModel(
        heads=heads,
        taxonomy_version=manifest["taxonomy_version"],
        embedding_fingerprint=stored,
        training_size=manifest["training_size"],
        trained_at=manifest["trained_at"],
        version=manifest["version"],
    )
