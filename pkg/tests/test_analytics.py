"""Scalar statistics, correlation reports, trend curves, topic correlation."""

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from csd.analytics import (
    AnalyticsError,
    DiversityBin,
    StatKind,
    correlation_by_diversity,
    iqr_mean,
    lower_quartile,
    median,
    normalize_trend,
    pearson,
    topic_correlation,
    trend_by_bin,
)
from csd.corpus import PaperRecord
from csd.diversity import DiversityResult, DiversityVariant

from oracles import median_by_sort, pearson_np

PLAIN = DiversityVariant.PLAIN


def result(target: int, sd: int, external_id: str | None = None) -> DiversityResult:
    return DiversityResult(
        target, external_id or str(target), max(sd, 1), {PLAIN: sd}, {PLAIN: 0}, None, None
    )


class TestMedian:
    def test_odd(self):
        assert median([1, 2, 3]) == 2

    def test_even(self):
        assert median([1, 2, 3, 4]) == 2.5

    def test_random_against_sort_oracle(self):
        rng = np.random.default_rng(1)
        values = list(rng.normal(size=101))
        assert median(values) == median_by_sort(values)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        values = list(rng.integers(0, 50, size=30).astype(float))
        shuffled = list(values)
        rng.shuffle(shuffled)
        assert median(values) == median(shuffled)

    def test_empty(self):
        with pytest.raises(AnalyticsError):
            median([])


class TestQuartiles:
    def test_iqr_mean_one_to_eight(self):
        assert iqr_mean(list(range(1, 9))) == 4.0

    def test_constant_list(self):
        assert iqr_mean([5, 5, 5, 5, 5]) == 5

    def test_short_list_falls_back_to_mean(self):
        assert iqr_mean([1, 100]) == 50.5

    def test_lower_quartile_nearest_rank(self):
        assert lower_quartile([0.1, 0.2, 0.3, 0.4]) == 0.1
        assert lower_quartile([5.0]) == 5.0
        assert lower_quartile([3.0, 1.0, 2.0, 4.0, 5.0]) == 2.0

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_iqr_mean_bounded_by_extremes(self, values):
        got = iqr_mean(values)
        assert min(values) - 1e-9 <= got <= max(values) + 1e-9

    def test_empty(self):
        with pytest.raises(AnalyticsError):
            iqr_mean([])


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_point_eight(self):
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(AnalyticsError, match="length mismatch"):
            pearson([1, 2], [1, 2, 3])

    def test_constant_series_is_undefined_not_zero(self):
        with pytest.raises(AnalyticsError, match="constant"):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(AnalyticsError, match="constant"):
            pearson([1, 2, 3], [4, 4, 4])

    def test_matches_numpy_on_random_data(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = list(rng.normal(size=int(rng.integers(3, 40))))
            y = list(rng.normal(size=len(x)))
            assert pearson(x, y) == pytest.approx(pearson_np(x, y), abs=1e-10)

    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=20),
        st.floats(0.1, 50),
        st.floats(-100, 100),
    )
    def test_positive_affine_invariance(self, x, a, b):
        assume(max(x) - min(x) > 1e-3)
        rng = np.random.default_rng(len(x))
        y = list(rng.normal(size=len(x)))
        base = pearson(x, y)
        scaled = pearson([a * xi + b for xi in x], y)
        assert scaled == pytest.approx(base, abs=1e-10)
        flipped = pearson([-a * xi + b for xi in x], y)
        assert flipped == pytest.approx(-base, abs=1e-10)


class TestCorrelationByDiversity:
    def test_collinear_group_medians(self):
        papers = [(1, 2), (1, 4), (2, 5), (2, 7), (3, 8), (3, 10)]
        report = correlation_by_diversity(papers, StatKind.MEDIAN)
        assert [g.statistic for g in report.groups] == [3, 6, 9]
        assert report.r == pytest.approx(1.0, abs=1e-12)
        assert [g.size for g in report.groups] == [2, 2, 2]

    def test_single_group_is_an_error(self):
        with pytest.raises(AnalyticsError, match="fewer than 2 diversity groups"):
            correlation_by_diversity([(2, 5), (2, 9)], StatKind.MEDIAN)

    def test_random_against_direct_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            papers = [
                (int(rng.integers(1, 7)), float(rng.integers(0, 100))) for _ in range(60)
            ]
            groups: dict[int, list[float]] = {}
            for sd, cites in papers:
                groups.setdefault(sd, []).append(cites)
            if len(groups) < 2:
                continue
            xs = sorted(groups)
            ys = [median_by_sort(groups[x]) for x in xs]
            report = correlation_by_diversity(papers, StatKind.MEDIAN)
            if len(set(ys)) == 1:
                assert report.r is None
            else:
                assert report.r == pytest.approx(pearson_np(xs, ys), abs=1e-10)

    def test_per_paper_mode(self):
        papers = [(1, 10), (2, 20), (3, 30), (1, 10)]
        report = correlation_by_diversity(papers, StatKind.MEDIAN, mode="per_paper")
        assert report.mode == "per_paper"
        assert report.r == pytest.approx(1.0, abs=1e-12)

    def test_iqr_mean_stat(self):
        papers = [(1, 1), (1, 3), (2, 5), (2, 7)]
        report = correlation_by_diversity(papers, StatKind.IQR_MEAN)
        assert [g.statistic for g in report.groups] == [2.0, 6.0]

    def test_undefined_r_reported_not_coerced(self):
        papers = [(1, 5), (2, 5), (3, 5)]
        report = correlation_by_diversity(papers, StatKind.MEDIAN)
        assert report.r is None
        assert report.note is not None


class TestNormalizeTrend:
    def test_uniform(self):
        assert normalize_trend([1] * 10) == pytest.approx([0.1] * 10)

    def test_all_zero_stays_zero(self):
        assert normalize_trend([0] * 10) == [0.0] * 10

    def test_direct_division(self):
        got = normalize_trend([5, 3, 2, 0, 0, 0, 0, 0, 0, 0])
        assert got == pytest.approx([0.5, 0.3, 0.2] + [0.0] * 7, abs=1e-12)

    def test_negative_entry(self):
        with pytest.raises(AnalyticsError, match="non-negative"):
            normalize_trend([1] * 9 + [-1])

    def test_wrong_length(self):
        with pytest.raises(AnalyticsError, match="10 entries"):
            normalize_trend([1, 2, 3])

    def test_sums_to_one_on_random_series(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            series = list(rng.integers(0, 30, size=10).astype(float))
            if sum(series) == 0:
                series[0] = 1.0
            assert sum(normalize_trend(series)) == pytest.approx(1.0, abs=1e-12)


class TestDiversityBins:
    def test_boundaries(self):
        assert DiversityBin.classify(1) is DiversityBin.LOW
        assert DiversityBin.classify(3) is DiversityBin.LOW
        assert DiversityBin.classify(4) is DiversityBin.MEDIUM
        assert DiversityBin.classify(6) is DiversityBin.MEDIUM
        assert DiversityBin.classify(7) is DiversityBin.HIGH
        assert DiversityBin.classify(40) is DiversityBin.HIGH
        assert DiversityBin.classify(0) is None

    def test_bins_partition_positive_integers(self):
        for sd in range(1, 100):
            assert DiversityBin.classify(sd) is not None


class TestTrendByBin:
    def test_one_paper_per_bin(self):
        results = [result(0, 2), result(1, 5), result(2, 9)]
        series = {
            0: [10, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            1: [5, 5, 0, 0, 0, 0, 0, 0, 0, 0],
            2: [0, 0, 0, 0, 0, 0, 0, 0, 0, 4],
        }
        curves = {ts.bin: ts for ts in trend_by_bin(results, series, PLAIN)}
        assert curves[DiversityBin.LOW].mean_normalized == pytest.approx(
            normalize_trend(series[0])
        )
        assert curves[DiversityBin.MEDIUM].mean_normalized[0] == pytest.approx(0.5)
        assert curves[DiversityBin.HIGH].mean_normalized[9] == pytest.approx(1.0)
        assert all(ts.n_papers == 1 for ts in curves.values())

    def test_mean_of_identical_papers_unchanged(self):
        results = [result(0, 2), result(1, 2)]
        series = {0: [4, 6, 0, 0, 0, 0, 0, 0, 0, 0], 1: [4, 6, 0, 0, 0, 0, 0, 0, 0, 0]}
        (curve,) = trend_by_bin(results, series, PLAIN)
        assert curve.n_papers == 2
        assert curve.mean_normalized == pytest.approx((0.4, 0.6) + (0.0,) * 8)

    def test_planted_bin_means_recovered(self):
        rng = np.random.default_rng(8)
        results = []
        series = {}
        expected: dict[DiversityBin, list[np.ndarray]] = {}
        for i in range(60):
            sd = int(rng.integers(1, 10))
            raw = rng.integers(1, 20, size=10).astype(float)
            results.append(result(i, sd))
            series[i] = list(raw)
            expected.setdefault(DiversityBin.classify(sd), []).append(raw / raw.sum())
        for ts in trend_by_bin(results, series, PLAIN):
            want = np.mean(expected[ts.bin], axis=0)
            assert np.allclose(ts.mean_normalized, want, atol=1e-12)

    def test_empty_bins_omitted(self):
        curves = trend_by_bin([result(0, 1)], {0: [1] + [0] * 9}, PLAIN)
        assert [ts.bin for ts in curves] == [DiversityBin.LOW]

    def test_zero_diversity_papers_skipped(self):
        results = [result(0, 0), result(1, 2)]
        series = {0: [1] + [0] * 9, 1: [1] + [0] * 9}
        curves = trend_by_bin(results, series, PLAIN)
        assert len(curves) == 1 and curves[0].n_papers == 1


class TestTopicCorrelation:
    def records_with_topics(self, counts):
        return [
            PaperRecord(id=str(i), topics=tuple(f"t{k}" for k in range(c)) or None)
            for i, c in enumerate(counts)
        ]

    def test_topic_count_equal_to_diversity(self):
        results = [result(i, sd) for i, sd in enumerate([1, 2, 3, 4])]
        records = self.records_with_topics([1, 2, 3, 4])
        assert topic_correlation(results, records, PLAIN) == pytest.approx(1.0, abs=1e-12)

    def test_constant_topic_count_is_undefined(self):
        results = [result(i, sd) for i, sd in enumerate([1, 2, 3])]
        records = self.records_with_topics([2, 2, 2])
        assert topic_correlation(results, records, PLAIN) is None

    def test_no_topic_data_is_an_error(self):
        results = [result(0, 1), result(1, 2)]
        records = [PaperRecord(id="0"), PaperRecord(id="1")]
        with pytest.raises(AnalyticsError, match="no topic data"):
            topic_correlation(results, records, PLAIN)

    def test_planted_linear_plus_noise_matches_oracle(self):
        rng = np.random.default_rng(9)
        sds = [int(rng.integers(1, 9)) for _ in range(80)]
        topic_counts = [max(0, sd + int(rng.integers(-1, 2))) for sd in sds]
        results = [result(i, sd) for i, sd in enumerate(sds)]
        records = [
            PaperRecord(id=str(i), topics=tuple(f"t{k}" for k in range(c)) if c else ("t0",))
            for i, c in enumerate(topic_counts)
        ]
        got = topic_correlation(results, records, PLAIN)
        want = pearson_np(
            [float(s) for s in sds], [float(r.n_topics) for r in records]
        )
        assert got == pytest.approx(want, abs=1e-10)
