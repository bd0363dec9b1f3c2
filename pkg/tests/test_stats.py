import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uxfeedback import stats
from uxfeedback.errors import (
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


def table_pairs(table):
    pairs = []
    for i, row in enumerate(table.row_labels):
        for j, col in enumerate(table.col_labels):
            pairs.extend([(row, col)] * int(table.counts[i, j]))
    return pairs


class TestScoring:
    @pytest.mark.parametrize(
        "rating,category",
        [
            (0, stats.NPSCategory.DETRACTOR), (6, stats.NPSCategory.DETRACTOR),
            (7, stats.NPSCategory.PASSIVE), (8, stats.NPSCategory.PASSIVE),
            (9, stats.NPSCategory.PROMOTER), (10, stats.NPSCategory.PROMOTER),
        ],
    )
    def test_nps_boundaries(self, rating, category):
        assert stats.nps_categorize(rating) is category

    @pytest.mark.parametrize("rating", [-1, 11, 5.5])
    def test_nps_out_of_range(self, rating):
        with pytest.raises(OutOfRangeError):
            stats.nps_categorize(rating)

    def test_tutorial_quality_constants(self):
        assert stats.tutorial_quality_score([10, 10, 10, 10, 10]) == 10.0
        assert stats.tutorial_quality_score([0, 0, 0, 0, 0]) == 0.0

    def test_tutorial_quality_mean(self):
        assert stats.tutorial_quality_score([7, 8, 9, 10, 6]) == 8.0

    def test_tutorial_quality_skips_missing(self):
        assert stats.tutorial_quality_score([8, None, 6, None, None]) == 7.0

    def test_tutorial_quality_all_missing(self):
        with pytest.raises(AllMissingError):
            stats.tutorial_quality_score([None, None, None, None, None])

    def test_uxlite_extremes_and_formula(self):
        assert stats.uxlite_score(5, 5) == 100.0
        assert stats.uxlite_score(1, 1) == 0.0
        assert stats.uxlite_score(4, 4) == 75.0

    def test_uxlite_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            stats.uxlite_score(0, 3)

    def test_satisfaction_category(self):
        assert stats.satisfaction_category(1) == "Very Dissatisfied"
        assert stats.satisfaction_category(5) == "Very Satisfied"


class TestBuildContingency:
    def test_replay_tutorial_table(self):
        got = stats.build_contingency(
            table_pairs(TUTORIAL_TABLE), stats.SENTIMENT_ROWS, stats.NPS_COLUMNS
        )
        assert np.array_equal(got.counts, TUTORIAL_TABLE.counts)

    def test_empty_pairs_zero_table(self):
        got = stats.build_contingency([], stats.SENTIMENT_ROWS, stats.NPS_COLUMNS)
        assert got.counts.sum() == 0
        assert got.counts.shape == (3, 3)

    def test_single_pair(self):
        got = stats.build_contingency(
            [("Negative", "Detractor")], stats.SENTIMENT_ROWS, stats.NPS_COLUMNS
        )
        assert got.counts[0, 0] == 1 and got.counts.sum() == 1

    def test_unknown_category(self):
        with pytest.raises(UnknownCategoryError):
            stats.build_contingency([("Angry", "Detractor")],
                                    stats.SENTIMENT_ROWS, stats.NPS_COLUMNS)


class TestChiSquared:
    def test_tutorial_survey_values(self):
        result = stats.chi_squared_test(TUTORIAL_TABLE)
        assert result.statistic == pytest.approx(98.11, abs=0.01)
        assert result.df == 4
        assert 2.3e-20 <= result.p_value <= 2.7e-20

    def test_app_survey_values(self):
        result = stats.chi_squared_test(APP_TABLE)
        assert result.statistic == pytest.approx(1920.1, abs=1.0)
        assert result.df == 8

    def test_perfect_independence(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.array([[10, 10], [10, 10]]))
        result = stats.chi_squared_test(table)
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_perfect_association(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.array([[20, 0], [0, 20]]))
        result = stats.chi_squared_test(table)
        assert result.statistic == pytest.approx(40.0, rel=1e-12)
        assert result.df == 1

    def test_zero_row_dropped_with_warning(self):
        table = stats.ContingencyTable(
            ("a", "b", "c"), ("x", "y"), np.array([[5, 10], [0, 0], [10, 5]])
        )
        with pytest.warns(ZeroMarginWarning):
            result = stats.chi_squared_test(table)
        assert result.df == 1

    def test_empty_table_degenerate(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.zeros((2, 2), dtype=int))
        with pytest.raises(DegenerateTableError):
            stats.chi_squared_test(table)

    def test_permutation_invariance(self):
        base = stats.chi_squared_test(TUTORIAL_TABLE)
        permuted = stats.ContingencyTable(
            ("Positive", "Negative", "Mixed"), ("Promoter", "Detractor", "Passive"),
            TUTORIAL_TABLE.counts[[2, 0, 1]][:, [2, 0, 1]],
        )
        result = stats.chi_squared_test(permuted)
        assert result.statistic == pytest.approx(base.statistic, rel=1e-12)
        assert result.p_value == pytest.approx(base.p_value, rel=1e-9)

    @given(st.integers(min_value=2, max_value=6))
    @settings(max_examples=10, deadline=None)
    def test_integer_scaling(self, m):
        base_stat = stats.chi_squared_test(TUTORIAL_TABLE).statistic
        scaled = stats.ContingencyTable(
            TUTORIAL_TABLE.row_labels, TUTORIAL_TABLE.col_labels, TUTORIAL_TABLE.counts * m
        )
        assert stats.chi_squared_test(scaled).statistic == pytest.approx(m * base_stat, rel=1e-10)
        # V is invariant under integer scaling of all counts
        assert stats.cramers_v(scaled) == pytest.approx(stats.cramers_v(TUTORIAL_TABLE), rel=1e-10)


class TestCramersV:
    def test_tutorial_survey_value(self):
        assert stats.cramers_v(TUTORIAL_TABLE) == pytest.approx(0.3017, abs=0.0005)

    def test_perfect_association_is_one(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.array([[20, 0], [0, 20]]))
        assert stats.cramers_v(table) == pytest.approx(1.0, rel=1e-12)

    def test_independence_is_zero(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.array([[10, 10], [10, 10]]))
        assert stats.cramers_v(table) == 0.0


class TestBootstrap:
    def test_tutorial_interval_brackets_reported_one(self):
        ci = stats.bootstrap_ci_cramers_v(
            table_pairs(TUTORIAL_TABLE), replicates=2000, level=0.95, seed=11,
            row_labels=stats.SENTIMENT_ROWS, col_labels=stats.NPS_COLUMNS,
        )
        assert ci.lower == pytest.approx(0.26, abs=0.015)
        assert ci.upper == pytest.approx(0.35, abs=0.015)
        assert ci.lower <= ci.point <= ci.upper

    def test_deterministic_given_seed(self):
        pairs = table_pairs(TUTORIAL_TABLE)
        a = stats.bootstrap_ci_cramers_v(pairs, replicates=1000, seed=5,
                                         row_labels=stats.SENTIMENT_ROWS,
                                         col_labels=stats.NPS_COLUMNS)
        b = stats.bootstrap_ci_cramers_v(pairs, replicates=1000, seed=5,
                                         row_labels=stats.SENTIMENT_ROWS,
                                         col_labels=stats.NPS_COLUMNS)
        assert (a.lower, a.upper) == (b.lower, b.upper)

    def test_below_1000_replicates_warns(self):
        with pytest.warns(TooFewReplicatesWarning):
            stats.bootstrap_ci_cramers_v(table_pairs(TUTORIAL_TABLE), replicates=200, seed=1,
                                         row_labels=stats.SENTIMENT_ROWS,
                                         col_labels=stats.NPS_COLUMNS)

    def test_degenerate_single_pair_errors_after_bounded_redraws(self):
        with pytest.warns(TooFewReplicatesWarning):
            with pytest.raises(DegenerateTableError):
                stats.bootstrap_ci_cramers_v([("Negative", "Detractor")], replicates=2, seed=0)


class TestConditionals:
    def test_promoter_given_negative(self):
        got = stats.conditional_probability(TUTORIAL_TABLE, "Negative", "Promoter")
        assert got == pytest.approx(0.4724, abs=0.0001)

    def test_detractor_given_negative(self):
        got = stats.conditional_probability(TUTORIAL_TABLE, "Negative", "Detractor")
        assert got == pytest.approx(0.3681, abs=0.0001)

    def test_single_nonzero_cell(self):
        table = stats.ContingencyTable(("a",), ("x", "y"), np.array([[0, 7]]))
        assert stats.conditional_probability(table, "a", "y") == 1.0

    def test_empty_condition(self):
        table = stats.ContingencyTable(("a", "b"), ("x", "y"), np.array([[1, 2], [0, 0]]))
        with pytest.raises(EmptyConditionError):
            stats.conditional_probability(table, "b", "x")

    def test_satisfied_share_given_positive(self):
        got = stats.conditional_probability_any(
            APP_TABLE, "Positive", {"Satisfied", "Very Satisfied"}
        )
        assert got * 100 == pytest.approx(92.03, abs=0.01)

    def test_satisfied_share_given_negative(self):
        got = stats.conditional_probability_any(
            APP_TABLE, "Negative", {"Satisfied", "Very Satisfied"}
        )
        assert got * 100 == pytest.approx(22.15, abs=0.01)

    def test_probability_difference_pp(self):
        got = stats.probability_difference(
            APP_TABLE, "Negative",
            {"Very Dissatisfied", "Dissatisfied"}, {"Satisfied", "Very Satisfied"},
        )
        assert got == pytest.approx(36.88, abs=0.01)

    def test_probability_difference_symmetric_row(self):
        table = stats.ContingencyTable(("r",), ("a", "b", "c", "d"), np.array([[5, 3, 3, 5]]))
        assert stats.probability_difference(table, "r", {"a", "b"}, {"c", "d"}) == 0.0

    def test_overlapping_sets_rejected(self):
        with pytest.raises(OverlappingSetsError):
            stats.probability_difference(APP_TABLE, "Negative",
                                         {"Satisfied"}, {"Satisfied", "Very Satisfied"})


class TestWilson:
    def test_promoter_given_negative_interval(self):
        ci = stats.wilson_interval(154, 326, 0.95)
        assert ci.lower * 100 == pytest.approx(41.88, abs=0.01)
        assert ci.upper * 100 == pytest.approx(52.66, abs=0.01)

    def test_detractor_given_negative_interval(self):
        ci = stats.wilson_interval(120, 326, 0.95)
        assert ci.lower * 100 == pytest.approx(31.76, abs=0.01)
        assert ci.upper * 100 == pytest.approx(42.17, abs=0.01)

    def test_app_survey_negative_interval(self):
        ci = stats.wilson_interval(645, 2912, 0.95)
        assert ci.lower * 100 == pytest.approx(20.68, abs=0.01)
        assert ci.upper * 100 == pytest.approx(23.69, abs=0.01)

    def test_app_survey_positive_interval(self):
        ci = stats.wilson_interval(612, 665, 0.95)
        assert ci.lower * 100 == pytest.approx(89.72, abs=0.01)
        assert ci.upper * 100 == pytest.approx(93.86, abs=0.01)

    def test_zero_successes_lower_bound_exactly_zero(self):
        ci = stats.wilson_interval(0, 10, 0.95)
        assert ci.lower == 0.0

    def test_full_successes_upper_bound_exactly_one(self):
        ci = stats.wilson_interval(10, 10, 0.95)
        assert ci.upper == 1.0

    @given(st.integers(min_value=1, max_value=500))
    @settings(max_examples=50, deadline=None)
    def test_contains_point_and_stays_in_unit_interval(self, trials):
        successes = trials // 3
        ci = stats.wilson_interval(successes, trials, 0.95)
        assert 0.0 <= ci.lower <= ci.point <= ci.upper <= 1.0

    def test_invalid_counts(self):
        with pytest.raises(InvalidCountsError):
            stats.wilson_interval(5, 4)
        with pytest.raises(InvalidCountsError):
            stats.wilson_interval(-1, 4)


class TestBinomialTest:
    def test_paper_value(self):
        result = stats.binomial_test_one_tailed(154, 326, 0.5)
        assert result.p_value == pytest.approx(0.854, abs=0.002)
        assert result.method is stats.TestMethod.BINOMIAL_ONE_TAILED_UPPER

    def test_whole_distribution(self):
        assert stats.binomial_test_one_tailed(0, 17, 0.5).p_value == 1.0

    def test_exact_fraction(self):
        assert stats.binomial_test_one_tailed(5, 10, 0.5).p_value == pytest.approx(
            638 / 1024, rel=1e-12
        )

    def test_top_of_support_analytic(self):
        assert stats.binomial_test_one_tailed(6, 6, 0.5).p_value == pytest.approx(0.5**6, rel=1e-12)

    def test_invalid(self):
        with pytest.raises(InvalidCountsError):
            stats.binomial_test_one_tailed(5, 4, 0.5)
        with pytest.raises(InvalidCountsError):
            stats.binomial_test_one_tailed(2, 4, 1.0)


class TestCurves:
    def test_fraction_at_breakpoint(self):
        got = stats.cumulative_frequency([stats.ScoreSeries("g", (1.0, 2.0, 3.0))], [2.0])
        assert got["g"][0] == pytest.approx(2 / 3)

    def test_reaches_one_at_max(self):
        got = stats.cumulative_frequency([stats.ScoreSeries("g", (1.0, 5.0, 9.0))], [9.0, 12.0])
        assert got["g"] == [1.0, 1.0]

    def test_empty_grid(self):
        got = stats.cumulative_frequency([stats.ScoreSeries("g", (1.0,))], [])
        assert got["g"] == []

    def test_empty_group_omitted_with_warning(self):
        with pytest.warns(EmptyGroupWarning):
            got = stats.cumulative_frequency([stats.ScoreSeries("empty", ())], [1.0])
        assert "empty" not in got

    def test_monotone_non_decreasing(self):
        rng = np.random.default_rng(0)
        series = [stats.ScoreSeries("g", tuple(rng.uniform(0, 10, 40)))]
        grid = np.linspace(0, 10, 21)
        curve = stats.cumulative_frequency(series, grid)["g"]
        assert all(b >= a for a, b in zip(curve, curve[1:]))
        assert curve[-1] == 1.0

    def test_non_increasing_grid_rejected(self):
        with pytest.raises(ValueError):
            stats.cumulative_frequency([stats.ScoreSeries("g", (1.0,))], [1.0, 1.0])


class TestGroupStats:
    def test_hand_computed(self):
        got = stats.group_mean_sd([stats.ScoreSeries("g", (2, 4, 4, 4, 5, 5, 7, 9))])["g"]
        assert got.mean == 5.0
        assert got.sd == pytest.approx(2.138, abs=0.001)
        assert got.n == 8

    def test_single_value_no_sd(self):
        got = stats.group_mean_sd([stats.ScoreSeries("g", (7.0,))])["g"]
        assert got.mean == 7.0
        assert got.sd is None

    def test_constant_series_zero_sd(self):
        got = stats.group_mean_sd([stats.ScoreSeries("g", (3.0, 3.0, 3.0))])["g"]
        assert got.sd == 0.0
