"""Feature assembly, splitting, the two regressors, scoring, and export."""

import csv

import numpy as np
import pytest

from csd.diversity import DiversityVariant, ThresholdPolicy, compute_all
from csd.predict import (
    FeatureRow,
    PredictionError,
    SplitSpec,
    assemble_features,
    evaluate,
    export_features,
    fit_knn,
    fit_linear,
    mse,
    predict_knn,
    predict_linear,
    r_squared,
    split,
)

FIXED = ThresholdPolicy(theta1_override=0.85, theta2_override=0.7)


def row(i, refs, early, sd, target, horizon=5):
    return FeatureRow(f"p{i:03d}", refs, early, sd, float(target), horizon)


def synthetic_rows(n, seed, with_sd=True, noise=0.0):
    """Rows obeying target = 3*refs + 2*sd + 1 (+ optional noise)."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        refs = int(rng.integers(0, 40))
        early = int(rng.integers(0, 25))
        sd = float(rng.integers(1, 11)) if with_sd else None
        target = 3.0 * refs + 2.0 * (sd or 0.0) + 1.0 + rng.normal() * noise
        rows.append(row(i, refs, early, sd, target))
    return rows


class TestAssembleFeatures:
    def test_fixture_composition(self, f1_corpus, f1_graph, f1_sims, n):
        results = {
            r.target: r
            for r in compute_all(f1_graph, f1_sims, range(8), FIXED)
        }
        rows = assemble_features(f1_corpus, f1_graph, results, 1, DiversityVariant.PLAIN)
        by_id = {r.id: r for r in rows}
        # paper 3 (year 1998) is cited in 2000 and 2001: only the first falls
        # in the three-year early window {1998..2000}, neither in the
        # one-year target window {1998}
        assert by_id["3"].citations_3yr == 1
        assert by_id["3"].target == 0.0
        ten_year = assemble_features(f1_corpus, f1_graph, results, 10, DiversityVariant.PLAIN)
        assert {r.id: r.target for r in ten_year}["3"] == 2.0
        assert by_id["3"].sd_value == 0.0
        assert by_id["1"].n_references == 5
        assert by_id["1"].sd_value == 4.0

    def test_zero_citers_row_kept(self, f1_corpus, f1_graph, f1_sims):
        results = {r.target: r for r in compute_all(f1_graph, f1_sims, range(8), FIXED)}
        rows = assemble_features(f1_corpus, f1_graph, results, 10, DiversityVariant.PLAIN)
        assert {r.id for r in rows} == set("12345678")
        assert {r.id: r.target for r in rows}["1"] == 0.0

    def test_baseline_drops_diversity_column(self, f1_corpus, f1_graph, f1_sims):
        results = {r.target: r for r in compute_all(f1_graph, f1_sims, range(8), FIXED)}
        with_sd = assemble_features(f1_corpus, f1_graph, results, 5, DiversityVariant.PLAIN)
        baseline = assemble_features(f1_corpus, f1_graph, results, 5)
        assert all(r.sd_value is None for r in baseline)
        for a, b in zip(baseline, with_sd):
            assert (a.id, a.n_references, a.citations_3yr, a.target) == (
                b.id,
                b.n_references,
                b.citations_3yr,
                b.target,
            )

    def test_bad_horizon(self, f1_corpus, f1_graph):
        with pytest.raises(PredictionError, match="horizon"):
            assemble_features(f1_corpus, f1_graph, {}, 3)


class TestSplit:
    def test_eighty_twenty(self):
        train, test = split(synthetic_rows(10, 0), SplitSpec(seed=1))
        assert len(train) == 8 and len(test) == 2
        assert {r.id for r in train} | {r.id for r in test} == {f"p{i:03d}" for i in range(10)}
        assert not ({r.id for r in train} & {r.id for r in test})

    def test_same_seed_same_split(self):
        rows = synthetic_rows(50, 1)
        assert split(rows, SplitSpec(seed=9)) == split(rows, SplitSpec(seed=9))

    def test_different_seeds_differ(self):
        rows = synthetic_rows(100, 2)
        a, _ = split(rows, SplitSpec(seed=1))
        b, _ = split(rows, SplitSpec(seed=2))
        assert [r.id for r in a] != [r.id for r in b]

    def test_too_few_rows(self):
        with pytest.raises(PredictionError, match="at least 5"):
            split(synthetic_rows(4, 3), SplitSpec(seed=0))


class TestLinear:
    def test_recovers_single_slope(self):
        rows = [row(i, i, 0, None, 2.0 * i) for i in range(10)]
        model = fit_linear(rows)
        assert model.coef[0] == pytest.approx(2.0, abs=1e-9)
        assert model.intercept == pytest.approx(0.0, abs=1e-9)

    def test_constant_target(self):
        rows = [row(i, i, i % 3, None, 7.0) for i in range(10)]
        model = fit_linear(rows)
        assert np.allclose(model.coef, 0.0, atol=1e-9)
        assert model.intercept == pytest.approx(7.0, abs=1e-9)

    def test_train_residuals_orthogonal_to_features(self):
        rng = np.random.default_rng(4)
        rows = synthetic_rows(60, 4, noise=5.0)
        model = fit_linear(rows)
        residuals = np.array([r.target for r in rows]) - predict_linear(model, rows)
        features = np.array(
            [[r.n_references, r.citations_3yr, r.sd_value] for r in rows], dtype=float
        )
        for col in features.T:
            assert abs(col @ residuals) < 1e-8 * max(1.0, np.abs(col).sum())
        assert abs(residuals.sum()) < 1e-8

    def test_rank_deficiency_flagged(self):
        rows = [row(i, 3, 3, None, float(i)) for i in range(8)]
        assert fit_linear(rows).rank_deficient

    def test_empty_train(self):
        with pytest.raises(PredictionError):
            fit_linear([])


class TestKnn:
    def test_exact_match_with_k1(self):
        rows = synthetic_rows(20, 5)
        model = fit_knn(rows, k=1)
        assert predict_knn(model, [rows[7]])[0] == rows[7].target

    def test_uniform_neighbours(self):
        rows = [row(i, i, 0, None, 4.0) for i in range(7)]
        model = fit_knn(rows, k=7)
        assert predict_knn(model, [row(99, 3, 0, None, 0.0)])[0] == 4.0

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(6)
        train = synthetic_rows(10, 6)
        model = fit_knn(train, k=3)
        queries = synthetic_rows(8, 7)
        got = predict_knn(model, queries)
        feats = np.array([[r.n_references, r.citations_3yr, r.sd_value] for r in train], float)
        targets = np.array([r.target for r in train])
        for qi, q in enumerate(queries):
            qv = np.array([q.n_references, q.citations_3yr, q.sd_value], float)
            dists = [(float(np.abs(feats[i] - qv).sum()), i) for i in range(len(train))]
            dists.sort()
            want = targets[[i for _, i in dists[:3]]].mean()
            assert got[qi] == pytest.approx(want, abs=1e-12)

    def test_distance_ties_break_to_lower_index(self):
        # two training points equidistant from the query; k=1 must take index 0
        train = [row(0, 0, 0, None, 10.0), row(1, 2, 0, None, 20.0)]
        train += [row(i, 100 + i, 0, None, 0.0) for i in range(2, 7)]
        model = fit_knn(train, k=1)
        assert predict_knn(model, [row(99, 1, 0, None, 0.0)])[0] == 10.0

    def test_k_equal_to_train_size_predicts_global_mean(self):
        rows = synthetic_rows(12, 8)
        model = fit_knn(rows, k=12)
        want = np.mean([r.target for r in rows])
        got = predict_knn(model, synthetic_rows(5, 9))
        assert np.allclose(got, want, atol=1e-12)

    def test_train_smaller_than_k(self):
        with pytest.raises(PredictionError, match="smaller than k"):
            fit_knn(synthetic_rows(5, 10), k=7)


class TestScoring:
    def test_perfect_prediction(self):
        assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
        assert mse([1, 2, 3], [1, 2, 3]) == 0.0

    def test_mean_prediction_scores_zero(self):
        actual = [1.0, 2.0, 3.0, 6.0]
        pred = [3.0] * 4
        assert r_squared(pred, actual) == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed(self):
        assert mse([2, 4], [1, 5]) == 1.0
        assert r_squared([2, 4], [1, 5]) == pytest.approx(0.75, abs=1e-12)

    def test_constant_actual_is_undefined(self):
        with pytest.raises(PredictionError, match="constant"):
            r_squared([1, 2], [5, 5])
        assert evaluate([1, 2], [5, 5]).r_squared is None

    def test_mse_zero_iff_equal(self):
        rng = np.random.default_rng(11)
        a = list(rng.normal(size=20))
        assert mse(a, a) == 0.0
        b = list(a)
        b[3] += 1e-6
        assert mse(a, b) > 0.0


class TestEndToEnd:
    def test_noise_free_linear_data_is_fit_exactly(self):
        rows = synthetic_rows(200, 12)
        train, test = split(rows, SplitSpec(seed=3))
        model = fit_linear(train)
        metrics = evaluate(predict_linear(model, test), [r.target for r in test])
        assert metrics.r_squared >= 1 - 1e-9
        assert metrics.mse <= 1e-9

    def test_pipeline_deterministic(self):
        rows = synthetic_rows(80, 13, noise=2.0)
        outs = []
        for _ in range(2):
            train, test = split(rows, SplitSpec(seed=21))
            model = fit_linear(train)
            outs.append(list(predict_linear(model, test)))
        assert outs[0] == outs[1]


class TestExport:
    def test_three_rows_four_lines(self, tmp_path):
        rows = synthetic_rows(3, 14)
        out = tmp_path / "features.csv"
        export_features(rows, out)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 4
        assert lines[0] == "id,n_references,citations_3yr,sd_value,target_h5"

    def test_round_trip(self, tmp_path):
        rows = synthetic_rows(10, 15)
        out = tmp_path / "features.csv"
        export_features(rows, out)
        with out.open(newline="", encoding="utf-8") as fh:
            parsed = list(csv.DictReader(fh))
        by_id = {r.id: r for r in rows}
        assert len(parsed) == 10
        for rec in parsed:
            original = by_id[rec["id"]]
            assert int(rec["n_references"]) == original.n_references
            assert float(rec["sd_value"]) == original.sd_value
            assert float(rec["target_h5"]) == pytest.approx(original.target, rel=1e-9)

    def test_baseline_schema(self, tmp_path):
        rows = synthetic_rows(3, 16, with_sd=False)
        out = tmp_path / "features.csv"
        export_features(rows, out)
        header = out.read_text(encoding="utf-8").splitlines()[0]
        assert header == "id,n_references,citations_3yr,target_h5"

    def test_rows_sorted_by_id(self, tmp_path):
        rows = list(reversed(synthetic_rows(5, 17)))
        out = tmp_path / "features.csv"
        export_features(rows, out)
        ids = [line.split(",")[0] for line in out.read_text().splitlines()[1:]]
        assert ids == sorted(ids)
