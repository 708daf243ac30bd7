"""Metrics, significance, merging, word frequency, rendering."""

import numpy as np
import pytest
from numpy.random import Generator, PCG64

from eraclass import evaluation as ev
from eraclass.errors import DataError

# Published per-class rows (precision %, recall %, F1 %) for the two
# five-era experiments; the F1 column must reproduce from (P, R).
PROSE_5ERA_ROWS = [
    ("Islamic", 51.67, 33.70, 40.79),
    ("Abbasid", 47.97, 53.50, 50.59),
    ("Aldoul wa al-emarat", 36.52, 46.24, 40.81),
    ("Ottoman", 42.38, 48.12, 45.07),
    ("Modern", 44.82, 37.26, 40.69),
]
POETRY_5ERA_ROWS = [
    ("Pre-Islamic", 68.22, 50.74, 58.20),
    ("Islamic", 56.33, 75.76, 64.62),
    ("Abbasid", 70.50, 65.81, 68.07),
    ("Ottoman", 61.25, 58.61, 59.90),
    ("Modern", 59.74, 57.00, 58.34),
]


class TestComputeMetrics:
    def test_perfect_predictions(self):
        report = ev.compute_metrics([0, 1, 2, 1], [0, 1, 2, 1], ["a", "b", "c"])
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0
        assert all(c.precision == c.recall == c.f1 == 1.0 for c in report.per_class)

    def test_hand_confusion(self):
        # actual:    a a a b b c
        # predicted: a b a b b a
        report = ev.compute_metrics([0, 0, 0, 1, 1, 2], [0, 1, 0, 1, 1, 0], ["a", "b", "c"])
        a, b, c = report.per_class
        assert a.precision == pytest.approx(2 / 3)
        assert a.recall == pytest.approx(2 / 3)
        assert b.precision == pytest.approx(2 / 3)
        assert b.recall == pytest.approx(1.0)
        assert c.precision == 0.0 and c.recall == 0.0 and c.f1 == 0.0
        assert report.accuracy == pytest.approx(4 / 6)

    def test_macro_f1_is_mean_of_per_class(self):
        rng = Generator(PCG64(0))
        actual = rng.integers(0, 4, size=200)
        predicted = rng.integers(0, 4, size=200)
        report = ev.compute_metrics(actual, predicted, list("abcd"))
        assert abs(report.macro_f1 - np.mean([c.f1 for c in report.per_class])) < 1e-12
        assert abs(report.macro_precision - np.mean([c.precision for c in report.per_class])) < 1e-12

    def test_permutation_invariance(self):
        rng = Generator(PCG64(1))
        actual = rng.integers(0, 3, size=60)
        predicted = rng.integers(0, 3, size=60)
        report1 = ev.compute_metrics(actual, predicted, list("abc"))
        order = rng.permutation(60)
        report2 = ev.compute_metrics(actual[order], predicted[order], list("abc"))
        assert report1.accuracy == report2.accuracy
        assert report1.macro_f1 == report2.macro_f1
        np.testing.assert_array_equal(report1.confusion.counts, report2.confusion.counts)

    def test_label_out_of_range_fatal(self):
        with pytest.raises(DataError):
            ev.compute_metrics([0, 3], [0, 1], ["a", "b", "c"])
        with pytest.raises(DataError):
            ev.compute_metrics([], [], ["a"])


class TestPublishedRows:
    @pytest.mark.parametrize("label,precision,recall,f1", PROSE_5ERA_ROWS + POETRY_5ERA_ROWS)
    def test_f1_reproduces_from_precision_recall(self, label, precision, recall, f1):
        computed = ev.f1_from_precision_recall(precision, recall)
        assert abs(computed - f1) <= 0.01  # percentage points

    def test_prose_macro_f1_matches_headline(self):
        mean_f1 = np.mean([row[3] for row in PROSE_5ERA_ROWS]) / 100.0
        assert abs(mean_f1 - 0.436) <= 0.001


class TestSignificance:
    def test_published_intervals(self):
        assert abs(ev.significance_interval(0.436, 7055) - 0.0116) <= 5e-5
        assert abs(ev.significance_interval(0.674, 11296) - 0.0087) <= 2e-4
        assert abs(ev.significance_interval(0.654, 1761) - 0.0225) <= 5e-4

    def test_tiny_sample(self):
        assert ev.significance_interval(0.5, 4) == pytest.approx(0.49)

    def test_symmetry_and_maximum(self):
        rng = Generator(PCG64(2))
        for p in rng.random(50).tolist():
            assert ev.significance_interval(p, 100) == pytest.approx(
                ev.significance_interval(1 - p, 100)
            )
            assert ev.significance_interval(p, 100) <= ev.significance_interval(0.5, 100)

    def test_input_validation(self):
        with pytest.raises(DataError):
            ev.significance_interval(1.5, 10)
        with pytest.raises(DataError):
            ev.significance_interval(0.5, 0)


class TestCompareClassifiers:
    def test_identical_not_significant(self):
        result = ev.compare_classifiers(0.7, 0.7, 1000)
        assert not result["significant"]

    def test_wide_gap_significant(self):
        assert ev.compare_classifiers(0.9, 0.5, 1000)["significant"]

    def test_narrow_gap_not_significant(self):
        assert not ev.compare_classifiers(0.51, 0.50, 100)["significant"]

    def test_mismatched_n_fatal(self):
        a = ev.compute_metrics([0, 1], [0, 1], ["x", "y"])
        b = ev.compute_metrics([0, 1, 1], [0, 1, 1], ["x", "y"])
        with pytest.raises(DataError):
            ev.compare_reports(a, b)


class TestMerging:
    def test_singleton_groups_preserve_accuracy(self):
        cm = ev.ConfusionMatrix(np.array([[5, 2], [1, 4]]), ["a", "b"])
        assert ev.merged_accuracy(cm, [[0], [1]]) == pytest.approx(cm.accuracy())

    def test_all_in_one_gives_one(self):
        cm = ev.ConfusionMatrix(np.array([[5, 2], [1, 4]]), ["a", "b"])
        assert ev.merged_accuracy(cm, [[0, 1]]) == 1.0

    def test_hand_summed_three_class(self):
        counts = np.array([[4, 2, 1], [3, 5, 0], [1, 1, 6]])
        cm = ev.ConfusionMatrix(counts, list("abc"))
        # merging {a,b}: trace = (4+2+3+5) + 6 = 20 of 23
        assert ev.merged_accuracy(cm, [[0, 1], [2]]) == pytest.approx(20 / 23)

    def test_merge_never_decreases_accuracy(self):
        rng = Generator(PCG64(3))
        for _ in range(300):
            k = int(rng.integers(3, 16))
            counts = rng.integers(0, 30, size=(k, k))
            if counts.sum() == 0:
                continue
            cm = ev.ConfusionMatrix(counts, [f"c{i}" for i in range(k)])
            groups, i = [], 0
            while i < k:
                width = int(rng.integers(1, k - i + 1))
                groups.append(list(range(i, i + width)))
                i += width
            assert ev.merged_accuracy(cm, groups) >= cm.accuracy() - 1e-12

    def test_invalid_partition_fatal(self):
        cm = ev.ConfusionMatrix(np.eye(3, dtype=np.int64), list("abc"))
        with pytest.raises(DataError):
            ev.merged_accuracy(cm, [[0, 2], [1]])
        with pytest.raises(DataError):
            ev.merged_accuracy(cm, [[0], [1]])


class TestWordFrequency:
    def test_unseen_tokens_give_zeros(self):
        counts = {"early": {"alpha": 3}, "late": {"beta": 7}}
        totals = ev.word_freq_by_era(["gamma", "delta"], counts)
        assert totals == {"early": 0, "late": 0}

    def test_single_token_passthrough(self):
        counts = {"e0": {"t": 3}, "e1": {"t": 7}}
        assert ev.word_freq_by_era(["t"], counts) == {"e0": 3, "e1": 7}

    def test_matches_brute_force_double_loop(self):
        counts = {
            "early": {"a": 2, "b": 5, "c": 1},
            "late": {"a": 4, "c": 9, "d": 2},
        }
        sample = ["a", "c", "a", "d"]
        totals = ev.word_freq_by_era(sample, counts)
        for era, table in counts.items():
            expected = 0
            for token in sample:
                expected += table.get(token, 0)
            assert totals[era] == expected

    def test_counts_builder(self):
        token_lists = [["a", "b", "a"], ["c"], ["b"]]
        labels = [0, 1, 0]
        counts = ev.era_token_counts_from_samples(token_lists, labels, ["early", "late"])
        assert counts == {"early": {"a": 2, "b": 2}, "late": {"c": 1}}


class TestRendering:
    def test_csv_roundtrip(self, tmp_path):
        cm = ev.ConfusionMatrix(np.array([[3, 1], [1, 3]]), ["first", "second"])
        text = ev.confusion_to_csv(cm)
        parsed = ev.confusion_from_csv(text)
        np.testing.assert_array_equal(parsed.counts, cm.counts)
        assert parsed.labels == cm.labels

    def test_csv_roundtrip_with_normalized_block(self):
        cm = ev.ConfusionMatrix(np.array([[3, 1], [1, 3]]), ["a", "b"])
        text = ev.confusion_to_csv(cm, normalize=True)
        assert "0.750000" in text and "0.250000" in text
        parsed = ev.confusion_from_csv(text)
        np.testing.assert_array_equal(parsed.counts, cm.counts)

    def test_svg_diagonal_only(self, tmp_path):
        cm = ev.ConfusionMatrix(np.diag([4, 5, 6]).astype(np.int64), list("abc"))
        svg = ev.confusion_to_svg(cm)
        assert svg.startswith("<svg")
        assert svg.count(">0</text>") == 6  # all off-diagonal cells are zero

    def test_render_writes_both_files(self, tmp_path):
        cm = ev.ConfusionMatrix(np.array([[2, 0], [1, 3]]), ["x", "y"])
        csv_path = tmp_path / "cm.csv"
        svg_path = tmp_path / "cm.svg"
        ev.render_confusion(cm, csv_path, svg_path, normalize=True)
        assert csv_path.exists() and svg_path.exists()
        assert "<svg" in svg_path.read_text()

    def test_report_roundtrip(self, tmp_path):
        report = ev.compute_metrics([0, 1, 1, 0, 1], [0, 1, 0, 0, 1], ["u", "v"])
        path = tmp_path / "report.json"
        ev.write_report(report, path, meta={"config_hash": "h"})
        loaded = ev.read_report(path)
        assert loaded.accuracy == report.accuracy
        assert loaded.macro_f1 == report.macro_f1
        np.testing.assert_array_equal(loaded.confusion.counts, report.confusion.counts)
        assert [c.label for c in loaded.per_class] == ["u", "v"]
