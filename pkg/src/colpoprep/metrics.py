"""Confusion matrices, classification metrics, threshold sweeps, and plots.

Abnormal is the positive class everywhere; Normal metrics come from the
transposed matrix. Cells that work out to 0/0 are defined as 0.0. Values are
kept at full precision internally and rendered with two-decimal half-up
rounding.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from colpoprep.dataset import ClassLabel


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    true_label: ClassLabel
    prob_abnormal: float

    def __post_init__(self):
        if not 0.0 <= self.prob_abnormal <= 1.0:
            raise ValueError(f"prob_abnormal must be in [0, 1], got {self.prob_abnormal}")

    def predicted_label(self, threshold: float = 0.5) -> ClassLabel:
        return ClassLabel.ABNORMAL if self.prob_abnormal >= threshold else ClassLabel.NORMAL


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[ClassLabel, ClassMetrics]
    accuracy: float
    weighted: Averages
    macro: Averages
    threshold: float
    confusion: ConfusionMatrix


def confusion(preds: list[PredictionRecord], threshold: float = 0.5) -> ConfusionMatrix:
    """Tally predictions against truth at the given probability threshold."""
    if not preds:
        raise ValueError("cannot build a confusion matrix from zero predictions")
    tp = fp = fn = tn = 0
    for p in preds:
        predicted_abnormal = p.prob_abnormal >= threshold
        if p.true_label is ClassLabel.ABNORMAL:
            tp += predicted_abnormal
            fn += not predicted_abnormal
        else:
            fp += predicted_abnormal
            tn += not predicted_abnormal
    return ConfusionMatrix(tp=int(tp), fp=int(fp), fn=int(fn), tn=int(tn))


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2.0 * precision * recall, precision + recall)


def report(cm: ConfusionMatrix, threshold: float = 0.5) -> MetricsReport:
    """Per-class and aggregate metrics from a confusion matrix."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    abnormal = ClassMetrics(
        precision=_safe_div(cm.tp, cm.tp + cm.fp),
        recall=_safe_div(cm.tp, cm.tp + cm.fn),
        f1=_f1(_safe_div(cm.tp, cm.tp + cm.fp), _safe_div(cm.tp, cm.tp + cm.fn)),
        support=cm.tp + cm.fn,
    )
    normal = ClassMetrics(
        precision=_safe_div(cm.tn, cm.tn + cm.fn),
        recall=_safe_div(cm.tn, cm.tn + cm.fp),
        f1=_f1(_safe_div(cm.tn, cm.tn + cm.fn), _safe_div(cm.tn, cm.tn + cm.fp)),
        support=cm.tn + cm.fp,
    )
    per_class = {ClassLabel.NORMAL: normal, ClassLabel.ABNORMAL: abnormal}
    total = cm.total

    def weighted(attr: str) -> float:
        return sum(getattr(m, attr) * m.support for m in per_class.values()) / total

    def macro(attr: str) -> float:
        return sum(getattr(m, attr) for m in per_class.values()) / len(per_class)

    return MetricsReport(
        per_class=per_class,
        accuracy=(cm.tp + cm.tn) / total,
        weighted=Averages(weighted("precision"), weighted("recall"), weighted("f1")),
        macro=Averages(macro("precision"), macro("recall"), macro("f1")),
        threshold=threshold,
        confusion=cm,
    )


def threshold_sweep(
    preds: list[PredictionRecord], thresholds: list[float]
) -> list[tuple[float, MetricsReport]]:
    """One report per threshold; abnormal recall is non-increasing in tau."""
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    return [(t, report(confusion(preds, t), threshold=t)) for t in thresholds]


# ---------------------------------------------------------------------------
# rendering


def render2(value: float) -> str:
    """Two-decimal half-up rendering of a full-precision value."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_pct(value: float) -> str:
    """Percentage with two half-up decimals, e.g. 0.789473... -> '78.95%'."""
    shifted = Decimal(repr(float(value))) * 100
    return str(shifted.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)) + "%"


def render_metric_pct(value: float) -> str:
    """Percent cell derived from the two-decimal metric value: 0.375 -> '38.00%'.

    Comparison tables round the metric to two decimals first and display that
    as a percentage, so 1/3 renders '33.00%', not '33.33%'.
    """
    two_dp = Decimal(render2(value)) * 100
    return str(two_dp.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)) + "%"


def render_classification_report(rep: MetricsReport) -> str:
    """Per-class metric table in the Normal / Abnormal / weighted layout."""
    normal = rep.per_class[ClassLabel.NORMAL]
    abnormal = rep.per_class[ClassLabel.ABNORMAL]
    total = normal.support + abnormal.support
    rows = [
        ("Metric", "Normal", "Abnormal", "Overall (Weighted Avg)"),
        ("Precision", render2(normal.precision), render2(abnormal.precision), render2(rep.weighted.precision)),
        ("Recall", render2(normal.recall), render2(abnormal.recall), render2(rep.weighted.recall)),
        ("F1-Score", render2(normal.f1), render2(abnormal.f1), render2(rep.weighted.f1)),
        ("Support", str(normal.support), str(abnormal.support), str(total)),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.append(f"Accuracy: {render2(rep.accuracy)} (threshold {rep.threshold:g})")
    return "\n".join(lines) + "\n"


_COMPARISON_COLUMNS = ("Model", "Accuracy", "Precision (Abnormal)", "Recall (Abnormal)", "F1-Score (Abnormal)")


def render_report(
    reports: MetricsReport | list[tuple[str, MetricsReport]],
) -> tuple[str, dict]:
    """Fixed-width comparison table plus its machine-readable JSON twin."""
    if isinstance(reports, MetricsReport):
        reports = [("model", reports)]
    if not reports:
        raise ValueError("need at least one report")
    rows = []
    for name, rep in reports:
        abnormal = rep.per_class[ClassLabel.ABNORMAL]
        rows.append(
            {
                "model": name,
                "accuracy": rep.accuracy,
                "precision_abnormal": abnormal.precision,
                "recall_abnormal": abnormal.recall,
                "f1_abnormal": abnormal.f1,
                "rendered": {
                    "accuracy": render_pct(rep.accuracy),
                    "precision_abnormal": render_metric_pct(abnormal.precision),
                    "recall_abnormal": render_metric_pct(abnormal.recall),
                    "f1_abnormal": render_metric_pct(abnormal.f1),
                },
            }
        )
    table_rows = [list(_COMPARISON_COLUMNS)] + [
        [
            r["model"],
            r["rendered"]["accuracy"],
            r["rendered"]["precision_abnormal"],
            r["rendered"]["recall_abnormal"],
            r["rendered"]["f1_abnormal"],
        ]
        for r in rows
    ]
    widths = [max(len(row[i]) for row in table_rows) for i in range(5)]
    text = "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table_rows
    ) + "\n"
    return text, {"columns": list(_COMPARISON_COLUMNS), "rows": rows}


# ---------------------------------------------------------------------------
# report file format


def report_to_dict(rep: MetricsReport) -> dict:
    cm = rep.confusion
    return {
        "threshold": rep.threshold,
        "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
        "accuracy": rep.accuracy,
        "per_class": {
            label.value: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }
            for label, m in rep.per_class.items()
        },
        "weighted": vars(rep.weighted).copy(),
        "macro": vars(rep.macro).copy(),
    }


def write_report(rep: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(rep), indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> MetricsReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cm = ConfusionMatrix(**data["confusion"])
    rebuilt = report(cm, threshold=data["threshold"])
    stored = {
        label.value: data["per_class"][label.value] for label in ClassLabel
    }
    for label in ClassLabel:
        m = rebuilt.per_class[label]
        s = stored[label.value]
        if s["support"] != m.support or abs(s["precision"] - m.precision) > 1e-12:
            raise ValueError(f"report file metrics do not match its confusion matrix ({label.value})")
    return rebuilt


# ---------------------------------------------------------------------------
# training history


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    train_accuracy: float
    train_loss: float
    val_accuracy: float
    val_loss: float
    learning_rate: float


@dataclass(frozen=True)
class TrainingHistory:
    rows: tuple[HistoryRow, ...]

    def __post_init__(self):
        epochs = [r.epoch for r in self.rows]
        if epochs and epochs[0] != 1:
            raise ValueError("history must start at epoch 1")
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("history epochs must be strictly increasing")


PREDICTIONS_HEADER = ["id", "true_label", "prob_abnormal"]
HISTORY_HEADER = ["epoch", "train_accuracy", "train_loss", "val_accuracy", "val_loss", "learning_rate"]


def read_predictions_csv(path: str | Path) -> list[PredictionRecord]:
    """Parse the trainer's predictions CSV contract, strictly."""
    preds: list[PredictionRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTIONS_HEADER:
            raise ValueError(f"{path}: expected header {','.join(PREDICTIONS_HEADER)!r}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            rec_id, label_text, prob_text = row
            try:
                label = ClassLabel(label_text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unknown label {label_text!r}") from None
            try:
                prob = float(prob_text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: prob_abnormal is not a number: {prob_text!r}") from None
            try:
                preds.append(PredictionRecord(rec_id, label, prob))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return preds


def write_predictions_csv(preds: list[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_HEADER)
        for p in preds:
            writer.writerow([p.id, p.true_label.value, repr(p.prob_abnormal)])


def read_history_csv(path: str | Path) -> TrainingHistory:
    rows: list[HistoryRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HISTORY_HEADER:
            raise ValueError(f"{path}: expected header {','.join(HISTORY_HEADER)!r}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                rows.append(
                    HistoryRow(
                        epoch=int(row[0]),
                        train_accuracy=float(row[1]),
                        train_loss=float(row[2]),
                        val_accuracy=float(row[3]),
                        val_loss=float(row[4]),
                        learning_rate=float(row[5]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return TrainingHistory(tuple(rows))


# ---------------------------------------------------------------------------
# SVG plots


_SVG_W, _SVG_H = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 40, 56
_TRAIN_COLOR = "#1f6fb2"
_VAL_COLOR = "#d1722f"


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}" font-family="sans-serif">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def plot_curves(history: TrainingHistory, out_path: str | Path, kind: str = "accuracy") -> None:
    """Write an SVG line chart of train and validation accuracy or loss."""
    if not history.rows:
        raise ValueError("history is empty")
    if kind not in ("accuracy", "loss"):
        raise ValueError(f"kind must be 'accuracy' or 'loss', got {kind!r}")
    epochs = [r.epoch for r in history.rows]
    train = [getattr(r, f"train_{kind}") for r in history.rows]
    val = [getattr(r, f"val_{kind}") for r in history.rows]

    x0, x1 = _MARGIN_L, _SVG_W - _MARGIN_R
    y0, y1 = _SVG_H - _MARGIN_B, _MARGIN_T
    e_lo, e_hi = min(epochs), max(epochs)
    v_lo, v_hi = min(train + val), max(train + val)
    if v_hi == v_lo:
        v_lo, v_hi = v_lo - 0.5, v_hi + 0.5
    pad = 0.05 * (v_hi - v_lo)
    v_lo, v_hi = v_lo - pad, v_hi + pad

    def sx(e: float) -> float:
        return x0 if e_hi == e_lo else x0 + (e - e_lo) / (e_hi - e_lo) * (x1 - x0)

    def sy(v: float) -> float:
        return y0 - (v - v_lo) / (v_hi - v_lo) * (y0 - y1)

    label = kind.capitalize()
    parts = _svg_header(f"Training and Validation {label} over Epochs")
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')

    stride = max(1, (len(epochs) + 19) // 20)
    for e in epochs[::stride]:
        x = sx(e)
        parts.append(f'<line x1="{x}" y1="{y0}" x2="{x}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{x}" y="{y0 + 20}" text-anchor="middle" font-size="11">{e}</text>')
    for v in _ticks(v_lo, v_hi):
        y = sy(v)
        parts.append(f'<line x1="{x0 - 5}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{y + 4}" text-anchor="end" font-size="11">{v:.3g}</text>')

    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{_SVG_H - 14}" text-anchor="middle" font-size="13">Epoch</text>'
    )
    parts.append(
        f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2})">{label}</text>'
    )
    for series, color in ((train, _TRAIN_COLOR), (val, _VAL_COLOR)):
        points = " ".join(f"{sx(e):.2f},{sy(v):.2f}" for e, v in zip(epochs, series))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
    lx = x0 + 12
    for i, (name, color) in enumerate((("train", _TRAIN_COLOR), ("validation", _VAL_COLOR))):
        ly = y1 + 14 + i * 18
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="12">{name}</text>')
    parts.append("</svg>")
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def plot_confusion(cm: ConfusionMatrix, out_path: str | Path) -> None:
    """Write an SVG confusion-matrix heatmap with the four counts in cells."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    # grid[true][predicted] with classes ordered (Normal, Abnormal)
    grid = [[cm.tn, cm.fp], [cm.fn, cm.tp]]
    classes = ["Normal", "Abnormal"]
    peak = max(max(row) for row in grid)

    cell = 130
    gx = 160
    gy = 80
    parts = _svg_header("Confusion Matrix")
    for i, true_name in enumerate(classes):
        for j, pred_name in enumerate(classes):
            count = grid[i][j]
            frac = count / peak if peak else 0.0
            r = round(255 - 155 * frac)
            g = round(255 - 130 * frac)
            b = 255
            x = gx + j * cell
            y = gy + i * cell
            text_fill = "white" if frac > 0.6 else "black"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({r},{g},{b})" stroke="black"/>'
            )
            parts.append(
                f'<text x="{x + cell / 2}" y="{y + cell / 2 + 7}" text-anchor="middle" '
                f'font-size="22" fill="{text_fill}">{count}</text>'
            )
    for j, name in enumerate(classes):
        parts.append(
            f'<text x="{gx + j * cell + cell / 2}" y="{gy + 2 * cell + 22}" '
            f'text-anchor="middle" font-size="13">{name}</text>'
        )
        parts.append(
            f'<text x="{gx - 12}" y="{gy + j * cell + cell / 2 + 4}" '
            f'text-anchor="end" font-size="13">{classes[j]}</text>'
        )
    parts.append(
        f'<text x="{gx + cell}" y="{gy + 2 * cell + 44}" text-anchor="middle" font-size="14">Predicted</text>'
    )
    parts.append(
        f'<text x="{gx - 96}" y="{gy + cell}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 {gx - 96} {gy + cell})">True</text>'
    )
    parts.append("</svg>")
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(parts) + "\n", encoding="utf-8")
