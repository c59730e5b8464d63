import itertools
import json

import numpy as np
import pytest

from conftest import (
    PUBLISHED_CROSSTAB,
    corpus_with_crosstab,
    make_record,
)
from mistriage.corpus import CleanCorpus, HarmLabel, InfoLabel
from mistriage.stats import (
    ConfusionMatrix,
    bootstrap_ci,
    bootstrap_samples,
    class_metrics,
    cohens_kappa,
    confusion,
    crosstab,
    error_breakdown,
    evaluate,
)


class TestConfusion:
    def test_single_pair(self):
        cm = confusion([(0, 0)])
        assert cm.counts == ((1, 0, 0), (0, 0, 0), (0, 0, 0))

    def test_order_independence(self):
        pairs = [(0, 1), (2, 2), (1, 0), (1, 1), (0, 0)]
        assert confusion(pairs) == confusion(list(reversed(pairs)))

    def test_published_matrix_reconstruction(self, published_cm):
        # diagonal = support - row error counts; trace must match the
        # published accuracy
        assert published_cm.as_array().sum(axis=1).tolist() == [313, 839, 241]
        assert np.trace(published_cm.as_array()) == 1067
        assert 1067 / 1393 == pytest.approx(0.7660, abs=5e-5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            confusion([])

    def test_round_trip_through_pairs(self, published_cm):
        assert confusion(published_cm.to_pairs()) == published_cm


class TestClassMetrics:
    def test_published_per_class_values(self, published_cm):
        m = class_metrics(published_cm)
        assert m.precision[0] == pytest.approx(0.714, abs=1e-3)
        assert m.recall[0] == pytest.approx(0.671, abs=1e-3)
        assert m.f1[0] == pytest.approx(0.692, abs=1e-3)
        assert m.precision[1] == pytest.approx(0.803, abs=1e-3)
        assert m.recall[1] == pytest.approx(0.833, abs=1e-3)
        assert m.f1[1] == pytest.approx(0.818, abs=1e-3)
        assert m.precision[2] == pytest.approx(0.693, abs=1e-3)
        assert m.recall[2] == pytest.approx(0.656, abs=1e-3)
        assert m.f1[2] == pytest.approx(0.674, abs=1e-3)
        assert m.accuracy == pytest.approx(0.7660, abs=1e-3)
        assert m.macro_f1 == pytest.approx(0.7277, abs=1e-3)
        assert m.weighted_f1 == pytest.approx(0.763, abs=2e-3)
        assert m.support == (313, 839, 241)

    def test_perfect_classifier(self):
        cm = ConfusionMatrix(((5, 0, 0), (0, 9, 0), (0, 0, 2)))
        m = class_metrics(cm)
        assert m.accuracy == 1.0
        assert m.macro_f1 == 1.0
        assert all(v == 1.0 for v in m.precision + m.recall + m.f1)

    def test_zero_predicted_class_flagged(self):
        cm = ConfusionMatrix(((3, 2, 0), (1, 4, 0), (0, 5, 0)))
        m = class_metrics(cm)
        assert m.precision[2] == 0.0
        assert m.f1[2] == 0.0
        assert any("True" in flag for flag in m.zero_division_flags)

    def test_metric_identities(self, published_cm):
        m = class_metrics(published_cm)
        counts = published_cm.as_array()
        assert m.accuracy == np.trace(counts) / counts.sum()
        assert m.macro_f1 == pytest.approx(np.mean(m.f1), abs=1e-15)
        # weighted recall equals accuracy for any confusion matrix
        assert m.weighted_recall == pytest.approx(m.accuracy, abs=1e-12)


class TestErrorBreakdown:
    def test_published_ranking(self, published_cm):
        ranked, total = error_breakdown(published_cm)
        assert [c.count for c in ranked] == [95, 78, 77, 62, 8, 6]
        assert total == 326
        expected_pct = (29.1, 23.9, 23.6, 19.0, 2.5, 1.8)
        for cell, expect in zip(ranked, expected_pct):
            assert cell.pct_of_errors == pytest.approx(expect, abs=0.05)

    def test_diagonal_only(self):
        ranked, total = error_breakdown(ConfusionMatrix(((3, 0, 0), (0, 1, 0), (0, 0, 2))))
        assert ranked == [] and total == 0

    def test_tie_row_major_order(self):
        cm = ConfusionMatrix(((0, 4, 0), (0, 0, 0), (0, 4, 0)))
        ranked, _ = error_breakdown(cm)
        assert [(c.true_class, c.pred_class) for c in ranked] == [(0, 1), (2, 1)]


class TestBootstrap:
    def test_all_correct_degenerate_interval(self):
        pairs = [(i % 3, i % 3) for i in range(30)]
        ci = bootstrap_ci(pairs, "macro_f1", iterations=200, seed=0)
        assert ci.lower == ci.upper == ci.point == 1.0

    def test_bounds_ordered_and_in_unit_interval(self, published_cm):
        ci = bootstrap_ci(published_cm.to_pairs(), "macro_f1", iterations=400, seed=1)
        assert 0.0 <= ci.lower <= ci.point <= ci.upper <= 1.0

    def test_published_interval(self, published_cm):
        ci = bootstrap_ci(published_cm.to_pairs(), "macro_f1", iterations=5000, seed=0)
        assert ci.lower == pytest.approx(0.7005, abs=0.005)
        assert ci.upper == pytest.approx(0.7532, abs=0.005)
        assert ci.point == pytest.approx(0.7277, abs=1e-3)

    def test_small_n_matches_exhaustive_enumeration(self):
        # n=3: the 27 equally likely index triples enumerate the resampling
        # distribution exactly
        pairs = [(0, 0), (1, 0), (2, 2)]
        def macro_f1_of(triple):
            cm = np.zeros((3, 3), dtype=int)
            for j in triple:
                t, p = pairs[j]
                cm[t][p] += 1
            f1 = []
            for c in range(3):
                tp = cm[c][c]
                denom = 2 * tp + (cm[:, c].sum() - tp) + (cm[c].sum() - tp)
                f1.append(2 * tp / denom if denom else 0.0)
            return sum(f1) / 3
        exact = {}
        for triple in itertools.product(range(3), repeat=3):
            v = round(macro_f1_of(triple), 12)
            exact[v] = exact.get(v, 0) + 1 / 27
        values = bootstrap_samples(pairs, "macro_f1", iterations=100_000, seed=3)
        observed = {}
        for v in np.round(values, 12):
            observed[v] = observed.get(v, 0) + 1 / len(values)
        assert set(observed) <= set(exact)
        for v, p in exact.items():
            # binomial MC error: 4 sigma
            sigma = (p * (1 - p) / len(values)) ** 0.5
            assert abs(observed.get(v, 0.0) - p) < 4 * sigma + 1e-9

    def test_seed_determinism(self, published_cm):
        pairs = published_cm.to_pairs()
        a = bootstrap_ci(pairs, "accuracy", iterations=300, seed=9)
        b = bootstrap_ci(pairs, "accuracy", iterations=300, seed=9)
        assert (a.lower, a.upper) == (b.lower, b.upper)

    def test_unsupported_metric(self):
        with pytest.raises(ValueError):
            bootstrap_ci([(0, 0)], "auc", iterations=10, seed=0)

    def test_point_within_bounds_across_seeds(self, published_cm):
        pairs = published_cm.to_pairs()
        inside = 0
        for seed in range(20):
            ci = bootstrap_ci(pairs, "macro_f1", iterations=500, seed=seed)
            inside += ci.lower <= ci.point <= ci.upper
        assert inside >= 19  # percentile-method caveat: allow a rare miss


class TestKappa:
    def test_identical_lists(self):
        assert cohens_kappa([0, 1, 2, 1], [0, 1, 2, 1]) == 1.0

    def test_hand_computed_zero(self):
        # p_o = 0.5, p_e = 0.5 -> kappa 0
        assert cohens_kappa([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_marginals(self):
        assert cohens_kappa([1, 1, 1], [1, 1, 1]) == 1.0

    def test_bounded_above_by_one(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            a = rng.integers(0, 3, size=n).tolist()
            b = rng.integers(0, 3, size=n).tolist()
            assert cohens_kappa(a, b) <= 1.0 + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cohens_kappa([0, 1], [0])


class TestCrossTab:
    def test_published_coupling_table(self):
        corpus = corpus_with_crosstab(PUBLISHED_CROSSTAB)
        table = crosstab(corpus)
        assert table.geq_med_pct[0] == pytest.approx(55.9, abs=0.05)
        assert table.geq_med_pct[1] == pytest.approx(21.8, abs=0.05)
        assert table.geq_med_pct[2] == pytest.approx(1.0, abs=0.05)
        assert table.high_pct[0] == pytest.approx(18.1, abs=0.05)
        assert table.high_pct[1] == pytest.approx(1.3, abs=0.05)
        assert table.high_pct[2] == pytest.approx(0.0, abs=0.05)
        assert table.total_counts == (6839, 1938, 447)

    def test_conservation(self):
        corpus = corpus_with_crosstab(((3, 1, 0), (2, 2, 2), (5, 0, 1)))
        table = crosstab(corpus)
        assert sum(sum(row) for row in table.counts) == len(corpus)
        for i, row in enumerate(table.counts):
            total = sum(row)
            if total:
                assert table.geq_med_pct[i] == pytest.approx(
                    100.0 * (row[1] + row[2]) / total
                )

    def test_single_cell_corpus(self):
        corpus = CleanCorpus([make_record(0, info=InfoLabel.TRUE, harm=HarmLabel.LOW)])
        table = crosstab(corpus)
        assert table.counts[int(InfoLabel.TRUE)][int(HarmLabel.LOW)] == 1
        assert table.geq_med_pct[int(InfoLabel.TRUE)] == 0.0
        # absent rows report zero
        assert table.geq_med_pct[int(InfoLabel.MISINFORMATION)] == 0.0

    def test_order_independence(self):
        corpus = corpus_with_crosstab(((2, 1, 1), (0, 3, 0), (4, 0, 2)))
        reversed_corpus = CleanCorpus(list(reversed(corpus.records)))
        assert crosstab(corpus) == crosstab(reversed_corpus)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            crosstab(CleanCorpus([]))


class TestEvaluate:
    def test_published_predictions_report(self, published_cm):
        pairs = published_cm.to_pairs()
        labels = [t for t, _ in pairs]
        preds = [p for _, p in pairs]
        report = evaluate(preds, labels, iterations=500, seed=0)
        assert report.metrics.accuracy == pytest.approx(0.7660, abs=1e-3)
        assert report.confusion == published_cm
        assert report.total_errors == 326

    def test_perfect_predictions(self):
        labels = [0, 1, 2] * 5
        report = evaluate(labels, labels, iterations=200, seed=0)
        assert report.metrics.accuracy == 1.0
        assert report.breakdown == []
        assert (report.macro_f1_ci.lower, report.macro_f1_ci.upper) == (1.0, 1.0)

    def test_misalignment_rejected(self):
        with pytest.raises(ValueError):
            evaluate([0, 1], [0], seed=0)

    def test_serialization_round_trip(self, published_cm):
        pairs = published_cm.to_pairs()
        labels = [t for t, _ in pairs]
        preds = [p for _, p in pairs]
        harms = [(t + p) % 3 for t, p in pairs]
        report = evaluate(preds, labels, harm_labels=harms, iterations=300, seed=4)
        blob = json.dumps(report.to_dict(), sort_keys=True)
        from mistriage.stats import EvalReport

        rt = EvalReport.from_dict(json.loads(blob))
        assert json.dumps(rt.to_dict(), sort_keys=True) == blob
