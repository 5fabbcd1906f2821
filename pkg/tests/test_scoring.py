from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from parsynth.scoring import (AttributeScore, CriteriaThresholds,
                              aggregate_cross_dataset, is_excluded,
                              rank_attributes, score_attribute)

EXCLUDE_TAGS = frozenset({"action-", "-Others", "-Other"})


def score_rows(inputs):
    return [score_attribute(r["attribute"], float(r["train_f1"]),
                            float(r["test_f1"]), int(r["positive_train"]),
                            int(r["total_train"]))
            for r in inputs]


class TestScoreAttribute:
    def test_weakest_attribute_scores_zero(self):
        s = score_attribute("hs-BaldHead", 81.98, 47.46, 122, 33268)
        assert (s.low_train_score, s.test_score, s.drop_score) == (0, 0, 0)
        assert s.total == 0
        assert s.low_train and s.test_band == "Low" and s.drop_band == "Big"

    def test_boundary_test_f1_of_50_is_medium(self):
        s = score_attribute("ub-Tight", 86.61, 50.00, 983, 33268)
        assert s.test_score == 1
        assert s.drop_score == 0  # drop 36.61 is big
        assert s.low_train_score == 0  # 983/33268 just under 3%
        assert s.total == 1

    def test_best_case(self):
        s = score_attribute("x", 100.0, 100.0, 100, 100)
        assert (s.low_train_score, s.test_score, s.drop_score) == (2, 2, 2)
        assert s.total == 6

    def test_negative_drop_counts_as_small(self):
        s = score_attribute("x", 40.0, 60.0, 50, 100)
        assert s.drop_score == 2

    @pytest.mark.parametrize("test_f1,expected", [
        (49.999, 0), (50.0, 1), (80.0, 1), (80.001, 2)])
    def test_test_band_boundaries(self, test_f1, expected):
        s = score_attribute("x", test_f1, test_f1, 50, 100)
        assert s.test_score == expected

    @pytest.mark.parametrize("drop,expected", [
        (14.999, 2), (15.0, 1), (30.0, 1), (30.001, 0)])
    def test_drop_band_boundaries(self, drop, expected):
        s = score_attribute("x", 90.0 + drop, 90.0, 50, 100)
        assert s.drop_score == expected

    def test_three_percent_rule_is_strict(self):
        assert score_attribute("x", 90, 90, 3, 100).low_train_score == 2
        assert score_attribute("x", 90, 90, 2, 100).low_train_score == 0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError, match="total_train"):
            score_attribute("x", 50, 50, 0, 0)
        with pytest.raises(ValueError, match="non-finite"):
            score_attribute("x", math.nan, 50, 5, 100)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100))
    def test_monotone_in_test_f1(self, train_f1, a, b):
        lo, hi = sorted((a, b))
        pos, total = 50, 1000
        s_lo = score_attribute("x", train_f1, lo, pos, total)
        s_hi = score_attribute("x", train_f1, hi, pos, total)
        # raising test F1 also shrinks the drop, so both sub-scores rise
        assert s_lo.total <= s_hi.total

    @given(st.floats(0, 100), st.floats(0, 100), st.integers(1, 999))
    def test_determinism(self, train_f1, test_f1, pos):
        a = score_attribute("x", train_f1, test_f1, pos, 1000)
        b = score_attribute("x", train_f1, test_f1, pos, 1000)
        assert a == b

    def test_custom_thresholds_validated(self):
        with pytest.raises(ValueError):
            CriteriaThresholds(test_low=90, test_high=80)
        with pytest.raises(ValueError):
            CriteriaThresholds(drop_small=40)
        with pytest.raises(ValueError):
            CriteriaThresholds(low_train_fraction=1.5)


class TestGoldenTables:
    def test_reproduces_every_recorded_row(self, scorer_inputs,
                                           expected_scores):
        for ds in ("rap1", "rap2", "rapzs"):
            scores = score_rows(scorer_inputs[ds])
            expected = expected_scores[ds]
            assert len(scores) == len(expected)
            for s, e in zip(scores, expected):
                assert s.attribute == e["attribute"]
                assert s.low_train == (e["low_train"] == "True"), s.attribute
                assert s.test_band == e["test_band"], s.attribute
                assert s.drop_band == e["drop_band"], s.attribute
                assert s.total == int(e["total"]), s.attribute

    def test_row_counts(self, expected_scores):
        assert len(expected_scores["rap1"]) == 51
        assert len(expected_scores["rap2"]) == 54
        assert len(expected_scores["rapzs"]) == 54


class TestRanking:
    def test_rap1_rank_one_group(self, scorer_inputs):
        report = rank_attributes(score_rows(scorer_inputs["rap1"]),
                                 exclude=EXCLUDE_TAGS, k=10)
        zero_band = [n for n, t in report.entries if t == 0]
        assert set(zero_band) == {"hs-BaldHead", "hs-Muffler"}

    def test_rapzs_zero_band(self, scorer_inputs):
        report = rank_attributes(score_rows(scorer_inputs["rapzs"]),
                                 exclude=EXCLUDE_TAGS, k=10)
        zero_band = [n for n, t in report.entries if t == 0]
        assert set(zero_band) == {"hs-BaldHead", "ub-ShortSleeve",
                                  "shoes-Cloth"}

    def test_tie_break_is_schema_order(self):
        scores = [AttributeScore(f"a{i}", 2, 1, 1, 4, (0, 0, 0, 1))
                  for i in range(5)]
        report = rank_attributes(scores, k=5)
        assert report.top_names == ("a0", "a1", "a2", "a3", "a4")

    def test_k_too_large(self):
        scores = [AttributeScore("a", 2, 2, 2, 6, (0, 0, 0, 1))]
        with pytest.raises(ValueError, match="exceeds"):
            rank_attributes(scores, k=2)

    def test_exclusion_flags_recorded(self):
        scores = [AttributeScore("action-X", 0, 0, 0, 0, (0, 0, 0, 1)),
                  AttributeScore("hs-Y", 2, 2, 2, 6, (0, 0, 0, 1))]
        report = rank_attributes(scores, exclude=EXCLUDE_TAGS, k=1)
        assert report.excluded == ("action-X",)
        assert report.top_names == ("hs-Y",)

    def test_top20_lists_reproduce_exactly(self, scorer_inputs,
                                           expected_top20):
        """The unexcluded top-20 per dataset is an exact ordered match."""
        for ds in ("rap1", "rap2", "rapzs"):
            report = rank_attributes(score_rows(scorer_inputs[ds]), k=20)
            assert list(report.top_names) == expected_top20[ds], ds


class TestAggregation:
    def make_reports(self, scorer_inputs):
        return [rank_attributes(score_rows(scorer_inputs[ds]), k=20)
                for ds in ("rap1", "rap2", "rapzs")]

    def test_counts_reproduce_recorded_table(self, scorer_inputs,
                                             expected_aggregation):
        agg = dict(aggregate_cross_dataset(
            self.make_reports(scorer_inputs), k=20))
        for name, count in expected_aggregation:
            assert agg.get(name, 0) == count, name

    def test_weakest_attribute_in_all_three(self, scorer_inputs):
        agg = dict(aggregate_cross_dataset(
            self.make_reports(scorer_inputs), k=20))
        assert agg["hs-BaldHead"] == 3
        assert agg["lb-Jeans"] == 0

    def test_single_report_k1(self):
        scores = [AttributeScore("a", 0, 0, 0, 0, (0, 0, 0, 1)),
                  AttributeScore("b", 2, 2, 2, 6, (0, 0, 0, 1))]
        agg = aggregate_cross_dataset([rank_attributes(scores, k=1)], k=1)
        assert agg == [("a", 1), ("b", 0)]

    def test_sorted_descending(self, scorer_inputs):
        agg = aggregate_cross_dataset(self.make_reports(scorer_inputs), k=20)
        counts = [c for _, c in agg]
        assert counts == sorted(counts, reverse=True)

    def test_requires_reports(self):
        with pytest.raises(ValueError):
            aggregate_cross_dataset([], k=5)


def test_is_excluded_tags():
    assert is_excluded("action-Holding", EXCLUDE_TAGS)
    assert is_excluded("ub-Others", EXCLUDE_TAGS)
    assert is_excluded("attachment-Other", EXCLUDE_TAGS)
    assert not is_excluded("ub-ShortSleeve", EXCLUDE_TAGS)
