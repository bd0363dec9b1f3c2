"""Sentiment-vs-metric statistics for survey analysis.

Covers UX metric scoring (NPS categories, tutorial quality, UX-Lite, PSAT),
contingency tables, the chi-squared independence test with an exact tail
probability, Cramer's V with a bootstrap percentile interval, conditional
probabilities with Wilson intervals, the exact one-tailed binomial test,
cumulative-frequency curves, and grouped descriptive statistics.

All operations are pure; bootstrap replicates draw from per-replicate RNG
streams derived from (seed, replicate index), so parallel and serial runs
agree.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllMissingError,
    DegenerateTableError,
    EmptyConditionError,
    EmptyGroupWarning,
    InvalidCountsError,
    OutOfRangeError,
    OverlappingSetsError,
    TooFewReplicatesWarning,
    UnknownCategoryError,
    ZeroMarginWarning,
)
from .special import binomial_upper_tail, chi_squared_tail, normal_quantile

logger = logging.getLogger(__name__)

SENTIMENT_ROWS = ("Negative", "Mixed", "Positive")
NPS_COLUMNS = ("Detractor", "Passive", "Promoter")
SATISFACTION_COLUMNS = (
    "Very Dissatisfied", "Dissatisfied", "Neither", "Satisfied", "Very Satisfied",
)


class NPSCategory(Enum):
    DETRACTOR = "Detractor"
    PASSIVE = "Passive"
    PROMOTER = "Promoter"


class TestMethod(Enum):
    CHI_SQUARED = "chi_squared"
    BINOMIAL_ONE_TAILED_UPPER = "binomial_one_tailed_upper"


class IntervalMethod(Enum):
    WILSON = "wilson"
    BOOTSTRAP_PERCENTILE = "bootstrap_percentile"


# --- metric scoring ------------------------------------------------------------

def nps_categorize(rating: int) -> NPSCategory:
    """0-6 Detractor, 7-8 Passive, 9-10 Promoter."""
    if not isinstance(rating, int) or isinstance(rating, bool) or not 0 <= rating <= 10:
        raise OutOfRangeError(f"NPS rating must be an integer in [0, 10], got {rating!r}")
    if rating >= 9:
        return NPSCategory.PROMOTER
    if rating >= 7:
        return NPSCategory.PASSIVE
    return NPSCategory.DETRACTOR


def tutorial_quality_score(items: Sequence[int | None]) -> float:
    """Mean of the answered 0-10 tutorial items."""
    answered = [x for x in items if x is not None]
    if not answered:
        raise AllMissingError("no tutorial items answered")
    for x in answered:
        if not 0 <= x <= 10:
            raise OutOfRangeError(f"tutorial item {x!r} outside [0, 10]")
    return sum(answered) / len(answered)


def uxlite_score(ease: int, does_what: int) -> float:
    """Two 1-5 items rescaled to [0, 100]."""
    for name, value in (("ease", ease), ("does_what", does_what)):
        if not 1 <= value <= 5:
            raise OutOfRangeError(f"{name} must be in [1, 5], got {value!r}")
    return ((does_what - 1) + (ease - 1)) / 8.0 * 100.0


def satisfaction_category(psat: int) -> str:
    if not 1 <= psat <= 5:
        raise OutOfRangeError(f"PSAT must be in [1, 5], got {psat!r}")
    return SATISFACTION_COLUMNS[psat - 1]


# --- contingency tables -----------------------------------------------------------

@dataclass(frozen=True)
class ContingencyTable:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("counts shape does not match the declared labels")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def row(self, label: str) -> np.ndarray:
        if label not in self.row_labels:
            raise UnknownCategoryError(label)
        return self.counts[self.row_labels.index(label)]

    def to_dict(self) -> dict:
        return {
            "rows": list(self.row_labels),
            "columns": list(self.col_labels),
            "counts": self.counts.tolist(),
        }


def build_contingency(
    pairs: Iterable[tuple[str, str]],
    row_labels: Sequence[str],
    col_labels: Sequence[str],
) -> ContingencyTable:
    """Tally (row, column) category pairs; declared order is kept even for
    zero-count categories."""
    row_index = {lab: i for i, lab in enumerate(row_labels)}
    col_index = {lab: j for j, lab in enumerate(col_labels)}
    counts = np.zeros((len(row_labels), len(col_labels)), dtype=np.int64)
    for row, col in pairs:
        if row not in row_index:
            raise UnknownCategoryError(row)
        if col not in col_index:
            raise UnknownCategoryError(col)
        counts[row_index[row], col_index[col]] += 1
    return ContingencyTable(tuple(row_labels), tuple(col_labels), counts)


def _reduced_counts(table: ContingencyTable) -> np.ndarray:
    counts = table.counts
    if counts.sum() < 1:
        raise DegenerateTableError("contingency table is empty")
    row_ok = counts.sum(axis=1) > 0
    col_ok = counts.sum(axis=0) > 0
    if not row_ok.all() or not col_ok.all():
        warnings.warn(
            "dropping all-zero rows/columns and adjusting degrees of freedom",
            ZeroMarginWarning,
            stacklevel=3,
        )
        counts = counts[row_ok][:, col_ok]
    if counts.shape[0] < 2 or counts.shape[1] < 2:
        raise DegenerateTableError("need at least 2 non-empty rows and columns")
    return counts


def _chi_squared_stat(counts: np.ndarray) -> tuple[float, int]:
    n = counts.sum()
    expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / n
    stat = float(((counts - expected) ** 2 / expected).sum())
    df = (counts.shape[0] - 1) * (counts.shape[1] - 1)
    return stat, df


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int | None
    p_value: float
    method: TestMethod

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "method": self.method.value,
        }


def chi_squared_test(table: ContingencyTable) -> TestResult:
    """Pearson statistic with expected counts row_total*col_total/n; the
    p-value is the regularized upper incomplete gamma Q(df/2, stat/2), good
    to at least 10 significant digits."""
    counts = _reduced_counts(table)
    stat, df = _chi_squared_stat(counts)
    return TestResult(
        statistic=stat, df=df, p_value=chi_squared_tail(stat, df),
        method=TestMethod.CHI_SQUARED,
    )


def cramers_v(table: ContingencyTable) -> float:
    """sqrt(chi2 / (n * (min(r, c) - 1))), bias-uncorrected."""
    counts = _reduced_counts(table)
    stat, _ = _chi_squared_stat(counts)
    n = counts.sum()
    return math.sqrt(stat / (n * (min(counts.shape) - 1)))


# --- interval estimates --------------------------------------------------------

@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lower: float
    upper: float
    level: float
    method: IntervalMethod

    def __post_init__(self) -> None:
        if not self.lower <= self.point <= self.upper:
            raise ValueError(
                f"interval [{self.lower}, {self.upper}] does not contain point {self.point}"
            )

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "method": self.method.value,
        }


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> IntervalEstimate:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidCountsError(f"bad counts: {successes}/{trials}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    p_hat = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p_hat + z2n / 2.0) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2n / (4.0 * trials)) / denom
    lower = 0.0 if successes == 0 else max(0.0, center - half)
    upper = 1.0 if successes == trials else min(1.0, center + half)
    return IntervalEstimate(point=p_hat, lower=lower, upper=upper, level=level,
                            method=IntervalMethod.WILSON)


def binomial_test_one_tailed(successes: int, trials: int, p0: float = 0.5) -> TestResult:
    """Exact upper-tail binomial test: p = P(X >= successes) under
    Binomial(trials, p0), term-by-term summation."""
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidCountsError(f"bad counts: {successes}/{trials}")
    if not 0.0 < p0 < 1.0:
        raise InvalidCountsError(f"p0 must be in (0, 1), got {p0}")
    return TestResult(
        statistic=float(successes),
        df=None,
        p_value=binomial_upper_tail(successes, trials, p0),
        method=TestMethod.BINOMIAL_ONE_TAILED_UPPER,
    )


# --- bootstrap ------------------------------------------------------------------

def _cramers_v_from_codes(tally: np.ndarray, r: int, c: int) -> float | None:
    counts = tally.reshape(r, c)
    counts = counts[counts.sum(axis=1) > 0][:, counts.sum(axis=0) > 0]
    if counts.shape[0] < 2 or counts.shape[1] < 2:
        return None
    n = counts.sum()
    expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / n
    stat = ((counts - expected) ** 2 / expected).sum()
    return math.sqrt(stat / (n * (min(counts.shape) - 1)))


def bootstrap_ci_cramers_v(
    pairs: Sequence[tuple[str, str]],
    replicates: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
    row_labels: Sequence[str] | None = None,
    col_labels: Sequence[str] | None = None,
    max_redraws: int = 100,
) -> IntervalEstimate:
    """Percentile bootstrap for Cramer's V: resample the n pairs with
    replacement, recompute V per replicate. Replicates whose table collapses
    below 2x2 are redrawn from the same stream (bounded; the redraw count is
    logged). Endpoints are widened, rarely, to contain the plug-in estimate,
    which interval estimates must by contract."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if replicates < 1000:
        warnings.warn(
            f"{replicates} replicates is below the 1000 recommended for reported intervals",
            TooFewReplicatesWarning,
            stacklevel=2,
        )
    pairs = list(pairs)
    rows = tuple(row_labels) if row_labels else tuple(sorted({r for r, _ in pairs}))
    cols = tuple(col_labels) if col_labels else tuple(sorted({c for _, c in pairs}))
    table = build_contingency(pairs, rows, cols)
    point = cramers_v(table)
    r, c = len(rows), len(cols)
    row_idx = {lab: i for i, lab in enumerate(rows)}
    col_idx = {lab: j for j, lab in enumerate(cols)}
    codes = np.array([row_idx[a] * c + col_idx[b] for a, b in pairs], dtype=np.int64)
    n = len(codes)
    values = np.empty(replicates)
    redraws = 0
    for rep in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
        v = None
        for attempt in range(max_redraws):
            sample = codes[rng.integers(0, n, n)]
            tally = np.bincount(sample, minlength=r * c)
            v = _cramers_v_from_codes(tally, r, c)
            if v is not None:
                redraws += attempt
                break
        if v is None:
            raise DegenerateTableError(
                f"replicate {rep}: table stayed degenerate after {max_redraws} redraws"
            )
        values[rep] = v
    if redraws:
        logger.info("bootstrap redrew %d degenerate replicate samples", redraws)
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(values, [alpha, 1.0 - alpha])
    return IntervalEstimate(
        point=point,
        lower=float(min(lower, point)),
        upper=float(max(upper, point)),
        level=level,
        method=IntervalMethod.BOOTSTRAP_PERCENTILE,
    )


# --- conditional probabilities -----------------------------------------------------

def conditional_probability(table: ContingencyTable, given: str, target: str) -> float:
    """P(column=target | row=given) = cell / row total."""
    row = table.row(given)
    if target not in table.col_labels:
        raise UnknownCategoryError(target)
    total = int(row.sum())
    if total == 0:
        raise EmptyConditionError(f"row {given!r} has no observations")
    return int(row[table.col_labels.index(target)]) / total


def conditional_probability_any(
    table: ContingencyTable, given: str, targets: Iterable[str]
) -> float:
    """P(column in targets | row=given)."""
    row = table.row(given)
    targets = set(targets)
    unknown = targets - set(table.col_labels)
    if unknown:
        raise UnknownCategoryError(sorted(unknown)[0])
    total = int(row.sum())
    if total == 0:
        raise EmptyConditionError(f"row {given!r} has no observations")
    hit = sum(int(row[table.col_labels.index(t)]) for t in targets)
    return hit / total


def probability_difference(
    table: ContingencyTable,
    given: str,
    set_a: Iterable[str],
    set_b: Iterable[str],
) -> float:
    """(P(col in A | row) - P(col in B | row)) in percentage points."""
    a, b = set(set_a), set(set_b)
    if a & b:
        raise OverlappingSetsError(f"column sets overlap: {sorted(a & b)}")
    return 100.0 * (
        conditional_probability_any(table, given, a)
        - conditional_probability_any(table, given, b)
    )


# --- score series ---------------------------------------------------------------

@dataclass(frozen=True)
class ScoreSeries:
    group: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))


def cumulative_frequency(
    series: Sequence[ScoreSeries],
    grid: Sequence[float],
) -> dict[str, list[float]]:
    """Per group, the fraction of scores <= x at each breakpoint. Groups with
    no observations are omitted (with a warning), not an error."""
    grid = list(grid)
    if any(nxt <= prev for prev, nxt in zip(grid, grid[1:])):
        raise ValueError("grid breakpoints must be strictly increasing")
    curves: dict[str, list[float]] = {}
    for s in series:
        if not s.values:
            warnings.warn(f"group {s.group!r} has no scores; curve omitted",
                          EmptyGroupWarning, stacklevel=2)
            continue
        values = np.sort(np.asarray(s.values, dtype=float))
        curves[s.group] = [
            float(np.searchsorted(values, x, side="right")) / len(values) for x in grid
        ]
    return curves


@dataclass(frozen=True)
class GroupStats:
    mean: float
    sd: float | None
    n: int


def group_mean_sd(series: Sequence[ScoreSeries]) -> dict[str, GroupStats]:
    """Arithmetic mean and sample standard deviation (n-1); sd is withheld
    for singleton groups."""
    out: dict[str, GroupStats] = {}
    for s in series:
        if not s.values:
            continue
        values = np.asarray(s.values, dtype=float)
        n = len(values)
        mean = float(values.mean())
        sd = float(values.std(ddof=1)) if n >= 2 else None
        out[s.group] = GroupStats(mean=mean, sd=sd, n=n)
    return out
