import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from colpoprep.dataset import ClassLabel
from colpoprep.metrics import (
    Averages,
    ConfusionMatrix,
    HistoryRow,
    MetricsReport,
    PredictionRecord,
    TrainingHistory,
    confusion,
    plot_confusion,
    plot_curves,
    read_history_csv,
    read_predictions_csv,
    read_report,
    render2,
    render_classification_report,
    render_metric_pct,
    render_pct,
    render_report,
    report,
    threshold_sweep,
    write_predictions_csv,
    write_report,
)

DATA = Path(__file__).parent / "data"

REFERENCE_CM = ConfusionMatrix(tp=18, fp=1, fn=12, tn=8)


def _random_preds(rng, n):
    return [
        PredictionRecord(
            f"p{i}",
            ClassLabel.ABNORMAL if rng.random() < 0.6 else ClassLabel.NORMAL,
            float(rng.random()),
        )
        for i in range(n)
    ]


class TestReferenceGolden:
    """The published validation outcome: 39 samples, 30 abnormal, 9 normal."""

    def test_rendered_values(self):
        rep = report(REFERENCE_CM)
        normal = rep.per_class[ClassLabel.NORMAL]
        abnormal = rep.per_class[ClassLabel.ABNORMAL]
        assert render2(normal.precision) == "0.40"
        assert render2(normal.recall) == "0.89"
        assert render2(normal.f1) == "0.55"
        assert render2(abnormal.precision) == "0.95"
        assert render2(abnormal.recall) == "0.60"
        assert render2(abnormal.f1) == "0.73"
        assert normal.support == 9
        assert abnormal.support == 30
        assert render2(rep.accuracy) == "0.67"
        assert render2(rep.weighted.precision) == "0.82"
        assert render2(rep.weighted.recall) == "0.67"
        assert render2(rep.weighted.f1) == "0.69"

    def test_exact_fractions(self):
        rep = report(REFERENCE_CM)
        assert rep.per_class[ClassLabel.ABNORMAL].precision == 18 / 19
        assert rep.per_class[ClassLabel.ABNORMAL].recall == 18 / 30
        assert rep.per_class[ClassLabel.NORMAL].precision == 8 / 20
        assert rep.per_class[ClassLabel.NORMAL].recall == 8 / 9
        assert rep.accuracy == 26 / 39

    def test_fixture_csv_reconstructs_counts(self):
        preds = read_predictions_csv(DATA / "reference_predictions.csv")
        assert len(preds) == 39
        assert confusion(preds, 0.5) == REFERENCE_CM

    def test_classification_report_text(self):
        text = render_classification_report(report(REFERENCE_CM))
        lines = text.splitlines()
        assert lines[0].split() == ["Metric", "Normal", "Abnormal", "Overall", "(Weighted", "Avg)"]
        assert "Precision" in lines[1] and "0.40" in lines[1] and "0.95" in lines[1] and "0.82" in lines[1]
        assert "Recall" in lines[2] and "0.89" in lines[2] and "0.60" in lines[2] and "0.67" in lines[2]
        assert "F1-Score" in lines[3] and "0.55" in lines[3] and "0.73" in lines[3] and "0.69" in lines[3]
        assert "Support" in lines[4] and "9" in lines[4].split() and "30" in lines[4].split()
        assert lines[5] == "Accuracy: 0.67 (threshold 0.5)"


class TestDegenerateMatrices:
    def test_all_normal_predictor(self):
        rep = report(ConfusionMatrix(tp=0, fp=0, fn=8, tn=11))
        abnormal = rep.per_class[ClassLabel.ABNORMAL]
        assert abnormal.precision == 0.0  # 0/0 convention
        assert abnormal.recall == 0.0
        assert abnormal.f1 == 0.0
        assert rep.accuracy == 11 / 19

    def test_densenet_style_row(self):
        rep = report(ConfusionMatrix(tp=3, fp=2, fn=5, tn=9))
        abnormal = rep.per_class[ClassLabel.ABNORMAL]
        assert abnormal.precision == 0.6
        assert abnormal.recall == 0.375
        assert render2(abnormal.recall) == "0.38"
        assert render2(abnormal.f1) == "0.46"
        assert rep.accuracy == 12 / 19

    def test_perfect_split(self):
        rep = report(ConfusionMatrix(tp=10, fp=0, fn=0, tn=10))
        for metrics in rep.per_class.values():
            assert metrics.precision == metrics.recall == metrics.f1 == 1.0
        assert rep.accuracy == 1.0
        assert rep.weighted == Averages(1.0, 1.0, 1.0)
        assert rep.macro == Averages(1.0, 1.0, 1.0)

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            report(ConfusionMatrix(0, 0, 0, 0))

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(tp=-1, fp=0, fn=0, tn=1)


class TestConfusion:
    def test_all_correct(self):
        preds = [
            PredictionRecord("a", ClassLabel.ABNORMAL, 0.9),
            PredictionRecord("b", ClassLabel.NORMAL, 0.1),
        ]
        cm = confusion(preds)
        assert cm == ConfusionMatrix(tp=1, fp=0, fn=0, tn=1)

    def test_zero_threshold_predicts_all_abnormal(self):
        preds = _random_preds(np.random.default_rng(0), 30)
        cm = confusion(preds, threshold=0.0)
        assert cm.fn == 0 and cm.tn == 0
        assert cm.total == 30

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            confusion([])

    def test_threshold_boundary_inclusive(self):
        preds = [PredictionRecord("x", ClassLabel.ABNORMAL, 0.5)]
        assert confusion(preds, 0.5).tp == 1  # prob >= tau means abnormal

    def test_bad_probability_rejected(self):
        with pytest.raises(ValueError):
            PredictionRecord("x", ClassLabel.ABNORMAL, 1.2)
        with pytest.raises(ValueError):
            PredictionRecord("x", ClassLabel.ABNORMAL, -0.1)


class TestThresholdSweep:
    def test_boundary_thresholds(self):
        preds = _random_preds(np.random.default_rng(1), 40)
        sweep = threshold_sweep(preds, [0.0, 1.0 + 1e-9])
        assert sweep[0][1].per_class[ClassLabel.ABNORMAL].recall == 1.0
        assert sweep[-1][1].per_class[ClassLabel.ABNORMAL].recall == 0.0

    def test_single_threshold_consistency(self):
        preds = _random_preds(np.random.default_rng(2), 25)
        [(tau, rep)] = threshold_sweep(preds, [0.5])
        assert tau == 0.5
        assert rep == report(confusion(preds, 0.5), threshold=0.5)

    def test_recall_monotone_on_random_sets(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            preds = _random_preds(rng, 50)
            taus = sorted(set([0.0, 1.0] + [float(rng.random()) for _ in range(30)]))
            recalls = [
                rep.per_class[ClassLabel.ABNORMAL].recall for _, rep in threshold_sweep(preds, taus)
            ]
            assert all(b <= a for a, b in zip(recalls, recalls[1:]))

    def test_unsorted_thresholds_rejected(self):
        preds = _random_preds(np.random.default_rng(4), 10)
        with pytest.raises(ValueError):
            threshold_sweep(preds, [0.5, 0.2])


class TestMetricIdentities:
    def _random_cm(self, rng):
        while True:
            tp, fp, fn, tn = (int(rng.integers(0, 40)) for _ in range(4))
            if tp + fp + fn + tn > 0 :
                return ConfusionMatrix(tp, fp, fn, tn)

    def test_weighted_average_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            cm = self._random_cm(rng)
            rep = report(cm)
            total = cm.total
            for attr in ("precision", "recall", "f1"):
                expected = (
                    sum(getattr(m, attr) * m.support for m in rep.per_class.values()) / total
                )
                assert abs(getattr(rep.weighted, attr) - expected) <= 1e-12

    def test_accuracy_equals_weighted_recall(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            rep = report(self._random_cm(rng))
            assert abs(rep.accuracy - rep.weighted.recall) <= 1e-12

    def test_supports_sum_to_total(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            cm = self._random_cm(rng)
            rep = report(cm)
            assert sum(m.support for m in rep.per_class.values()) == cm.total

    def test_f1_between_precision_and_recall(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            rep = report(self._random_cm(rng))
            for m in rep.per_class.values():
                if m.precision + m.recall > 0:
                    assert min(m.precision, m.recall) - 1e-12 <= m.f1
                    assert m.f1 <= max(m.precision, m.recall) + 1e-12

    def test_positive_class_swap_transposes_rows(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            cm = self._random_cm(rng)
            swapped = ConfusionMatrix(tp=cm.tn, fp=cm.fn, fn=cm.fp, tn=cm.tp)
            rep, srep = report(cm), report(swapped)
            assert rep.per_class[ClassLabel.ABNORMAL] == srep.per_class[ClassLabel.NORMAL]
            assert rep.per_class[ClassLabel.NORMAL] == srep.per_class[ClassLabel.ABNORMAL]
            assert rep.accuracy == srep.accuracy


class TestRendering:
    def test_render2_half_up(self):
        assert render2(0.375) == "0.38"
        assert render2(0.5) == "0.50"
        assert render2(0.946) == "0.95"
        assert render2(0.0) == "0.00"
        assert render2(1.0) == "1.00"
        assert render2(2 / 3) == "0.67"

    def test_render_pct(self):
        assert render_pct(15 / 19) == "78.95%"
        assert render_pct(12 / 19) == "63.16%"
        assert render_pct(16 / 19) == "84.21%"
        assert render_pct(0.0) == "0.00%"

    def test_render_metric_pct_rounds_fraction_first(self):
        assert render_metric_pct(0.375) == "38.00%"
        assert render_metric_pct(1 / 3) == "33.00%"
        assert render_metric_pct(0.6) == "60.00%"
        assert render_metric_pct(report(ConfusionMatrix(3, 2, 5, 9)).per_class[ClassLabel.ABNORMAL].f1) == "46.00%"
        assert render_metric_pct(0.25) == "25.00%"
        assert render_metric_pct(0.5) == "50.00%"

    def test_single_report_table(self):
        text, twin = render_report(report(REFERENCE_CM))
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("Model")
        assert "66.67%" in lines[1]  # accuracy of 26/39
        assert len(twin["rows"]) == 1

    def test_comparison_table_and_json_twin(self):
        pairs = [
            ("MobileNetV2", report(ConfusionMatrix(tp=1, fp=1, fn=3, tn=14))),
            ("DenseNet121", report(ConfusionMatrix(tp=3, fp=2, fn=5, tn=9))),
        ]
        text, twin = render_report(pairs)
        lines = text.splitlines()
        assert lines[0].split("  ")[0] == "Model"
        assert "78.95%" in lines[1] and "50.00%" in lines[1] and "25.00%" in lines[1] and "33.00%" in lines[1]
        assert "63.16%" in lines[2] and "60.00%" in lines[2] and "38.00%" in lines[2] and "46.00%" in lines[2]
        # the twin is JSON-serializable and carries full precision
        parsed = json.loads(json.dumps(twin))
        assert parsed == twin
        assert twin["rows"][1]["recall_abnormal"] == 0.375
        assert twin["rows"][1]["rendered"]["recall_abnormal"] == "38.00%"

    def test_empty_comparison_rejected(self):
        with pytest.raises(ValueError):
            render_report([])


class TestReportFile:
    def test_roundtrip(self, tmp_path):
        rep = report(REFERENCE_CM, threshold=0.4)
        path = tmp_path / "report.json"
        write_report(rep, path)
        again = read_report(path)
        assert again == rep

    def test_tampered_metrics_rejected(self, tmp_path):
        rep = report(REFERENCE_CM)
        path = tmp_path / "report.json"
        write_report(rep, path)
        data = json.loads(path.read_text())
        data["per_class"]["Abnormal"]["precision"] = 0.99
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="match"):
            read_report(path)


class TestPredictionsCsv:
    def test_roundtrip(self, tmp_path):
        preds = _random_preds(np.random.default_rng(10), 20)
        path = tmp_path / "preds.csv"
        write_predictions_csv(preds, path)
        assert read_predictions_csv(path) == preds

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,label,score\nx,Normal,0.5\n")
        with pytest.raises(ValueError, match="header"):
            read_predictions_csv(path)

    def test_bad_label_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,true_label,prob_abnormal\na,Normal,0.5\nb,Weird,0.5\n")
        with pytest.raises(ValueError, match=":3:"):
            read_predictions_csv(path)

    def test_out_of_range_probability_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,true_label,prob_abnormal\na,Normal,1.5\n")
        with pytest.raises(ValueError, match=":2:"):
            read_predictions_csv(path)

    def test_non_numeric_probability(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,true_label,prob_abnormal\na,Normal,high\n")
        with pytest.raises(ValueError, match="number"):
            read_predictions_csv(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,true_label,prob_abnormal\na,Normal\n")
        with pytest.raises(ValueError, match="3 fields"):
            read_predictions_csv(path)


class TestHistory:
    def _write(self, path, rows):
        lines = ["epoch,train_accuracy,train_loss,val_accuracy,val_loss,learning_rate"]
        lines += [",".join(str(v) for v in r) for r in rows]
        path.write_text("\n".join(lines) + "\n")

    def test_read_history(self, tmp_path):
        path = tmp_path / "hist.csv"
        self._write(path, [(1, 0.6, 0.9, 0.55, 1.0, 1e-4), (2, 0.7, 0.7, 0.6, 0.9, 1e-4)])
        history = read_history_csv(path)
        assert len(history.rows) == 2
        assert history.rows[0] == HistoryRow(1, 0.6, 0.9, 0.55, 1.0, 1e-4)

    def test_epochs_must_start_at_one(self):
        with pytest.raises(ValueError, match="epoch 1"):
            TrainingHistory((HistoryRow(2, 0.5, 1.0, 0.5, 1.0, 1e-4),))

    def test_epochs_strictly_increasing(self):
        rows = (
            HistoryRow(1, 0.5, 1.0, 0.5, 1.0, 1e-4),
            HistoryRow(1, 0.6, 0.9, 0.6, 0.9, 1e-4),
        )
        with pytest.raises(ValueError, match="increasing"):
            TrainingHistory(rows)

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("epoch,acc\n1,0.5\n")
        with pytest.raises(ValueError, match="header"):
            read_history_csv(path)

    def test_bad_value_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "epoch,train_accuracy,train_loss,val_accuracy,val_loss,learning_rate\n"
            "1,0.5,1.0,0.5,1.0,1e-4\n"
            "2,fast,1.0,0.5,1.0,1e-4\n"
        )
        with pytest.raises(ValueError, match=":3:"):
            read_history_csv(path)


def _history_2_epochs():
    return TrainingHistory(
        (
            HistoryRow(1, 0.60, 0.95, 0.55, 1.05, 1e-4),
            HistoryRow(2, 0.72, 0.70, 0.61, 0.88, 1e-4),
        )
    )


class TestPlots:
    def test_curves_svg_structure(self, tmp_path):
        path = tmp_path / "acc.svg"
        plot_curves(_history_2_epochs(), path, kind="accuracy")
        root = ET.fromstring(path.read_text())
        ns = "{http://www.w3.org/2000/svg}"
        polylines = root.findall(f"{ns}polyline")
        assert len(polylines) == 2
        texts = [t.text for t in root.iter(f"{ns}text")]
        assert "1" in texts and "2" in texts  # epoch ticks
        assert "Epoch" in texts
        assert "Accuracy" in texts
        assert "train" in texts and "validation" in texts
        points = [p.get("points") for p in polylines]
        assert all(len(p.split()) == 2 for p in points)  # 2 epochs -> 2 vertices

    def test_curves_loss_kind(self, tmp_path):
        path = tmp_path / "loss.svg"
        plot_curves(_history_2_epochs(), path, kind="loss")
        content = path.read_text()
        assert "Loss" in content and "<polyline" in content

    def test_empty_history_no_file(self, tmp_path):
        path = tmp_path / "never.svg"
        with pytest.raises(ValueError):
            plot_curves(TrainingHistory(()), path)
        assert not path.exists()

    def test_bad_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="kind"):
            plot_curves(_history_2_epochs(), tmp_path / "x.svg", kind="f1")

    def test_confusion_svg_counts(self, tmp_path):
        path = tmp_path / "cm.svg"
        plot_confusion(REFERENCE_CM, path)
        root = ET.fromstring(path.read_text())
        ns = "{http://www.w3.org/2000/svg}"
        texts = [t.text for t in root.iter(f"{ns}text")]
        for count in ("18", "1", "12", "8"):
            assert count in texts
        assert texts.count("Normal") == 2 and texts.count("Abnormal") == 2
        assert "Predicted" in texts and "True" in texts
        assert len(root.findall(f"{ns}rect")) == 5  # background + four cells

    def test_empty_confusion_rejected(self, tmp_path):
        path = tmp_path / "never.svg"
        with pytest.raises(ValueError):
            plot_confusion(ConfusionMatrix(0, 0, 0, 0), path)
        assert not path.exists()
