"""Metrics, significance intervals, confusion analyses, and rendering.

Macro metrics are unweighted means of the per-class values; a class's
precision, recall, or F1 is defined as 0 when its denominator is 0 so
the macro average always exists.  The 95% significance interval on an
accuracy p over n test samples is 1.96 sqrt(p(1-p)/n), and two
classifiers on the same test set differ significantly when their
accuracy gap exceeds the combined interval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

Z_95 = 1.96


@dataclass
class ConfusionMatrix:
    """Rows = actual class, columns = predicted class."""

    counts: np.ndarray
    labels: list[str]

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


@dataclass
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: list[ClassMetrics]
    interval95: float
    confusion: ConfusionMatrix
    n: int


def f1_from_precision_recall(precision: float, recall: float) -> float:
    """Harmonic mean, 0 when both components are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def confusion_from_labels(actual, predicted, labels: list[str]) -> ConfusionMatrix:
    k = len(labels)
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape or actual.size == 0:
        raise DataError("actual/predicted must be equal-length and non-empty")
    if actual.min() < 0 or actual.max() >= k or predicted.min() < 0 or predicted.max() >= k:
        raise DataError(f"label outside range 0..{k - 1}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (actual, predicted), 1)
    return ConfusionMatrix(counts, labels)


def compute_metrics(actual, predicted, labels: list[str]) -> EvalReport:
    """Accuracy plus per-class and macro precision/recall/F1."""
    cm = confusion_from_labels(actual, predicted, labels)
    counts = cm.counts
    per_class = []
    for i, label in enumerate(labels):
        tp = float(counts[i, i])
        fp = float(counts[:, i].sum() - counts[i, i])
        fn = float(counts[i, :].sum() - counts[i, i])
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        per_class.append(
            ClassMetrics(
                label,
                precision,
                recall,
                f1_from_precision_recall(precision, recall),
                int(counts[i, :].sum()),
            )
        )
    accuracy = cm.accuracy()
    n = cm.total
    return EvalReport(
        accuracy=accuracy,
        macro_precision=float(np.mean([c.precision for c in per_class])),
        macro_recall=float(np.mean([c.recall for c in per_class])),
        macro_f1=float(np.mean([c.f1 for c in per_class])),
        per_class=per_class,
        interval95=significance_interval(accuracy, n),
        confusion=cm,
        n=n,
    )


def significance_interval(p: float, n: int, z: float = Z_95) -> float:
    """Half-width of the normal-approximation interval on a proportion."""
    if not 0.0 <= p <= 1.0:
        raise DataError(f"proportion {p} outside [0, 1]")
    if n < 1:
        raise DataError("n must be >= 1")
    return z * float(np.sqrt(p * (1.0 - p) / n))


def compare_classifiers(
    accuracy_a: float, accuracy_b: float, n: int, z: float = Z_95
) -> dict:
    """Difference-of-two-proportions test on one shared test set.

    margin is the minimum accuracy gap that would be significant.
    """
    margin = z * float(
        np.sqrt(
            accuracy_a * (1.0 - accuracy_a) / n + accuracy_b * (1.0 - accuracy_b) / n
        )
    )
    diff = abs(accuracy_a - accuracy_b)
    return {"significant": diff > margin, "margin": margin, "difference": diff}


def compare_reports(report_a: EvalReport, report_b: EvalReport, z: float = Z_95) -> dict:
    if report_a.n != report_b.n:
        raise DataError(f"test sets differ in size: {report_a.n} vs {report_b.n}")
    return compare_classifiers(report_a.accuracy, report_b.accuracy, report_a.n, z)


def merge_confusion(cm: ConfusionMatrix, groups: list[list[int]]) -> ConfusionMatrix:
    """Coarsen a confusion matrix by summing blocks of consecutive classes."""
    flat = [i for g in groups for i in g]
    if flat != list(range(cm.n_classes)):
        raise DataError(
            f"groups must partition 0..{cm.n_classes - 1} in order, got {groups}"
        )
    for g in groups:
        if g != list(range(g[0], g[0] + len(g))):
            raise DataError(f"group {g} is not a consecutive run")
    k = len(groups)
    merged = np.zeros((k, k), dtype=np.int64)
    for gi, gval in enumerate(groups):
        for gj, gval2 in enumerate(groups):
            merged[gi, gj] = cm.counts[np.ix_(gval, gval2)].sum()
    labels = ["+".join(cm.labels[i] for i in g) for g in groups]
    return ConfusionMatrix(merged, labels)


def merged_accuracy(cm: ConfusionMatrix, groups: list[list[int]]) -> float:
    """Accuracy after uniting each group of consecutive eras."""
    return merge_confusion(cm, groups).accuracy()


def word_freq_by_era(
    sample_tokens: list[str], era_token_counts: dict[str, dict[str, int]]
) -> dict[str, int]:
    """Per-era total corpus frequency of a sample's tokens.

    Tokens count with multiplicity; tokens unseen in an era contribute 0.
    """
    totals: dict[str, int] = {}
    for era, counts in era_token_counts.items():
        totals[era] = sum(counts.get(tok, 0) for tok in sample_tokens)
    return totals


def era_token_counts_from_samples(
    token_lists: list[list[str]], class_labels: list[int], era_names: list[str]
) -> dict[str, dict[str, int]]:
    """Aggregate per-era token counts over a (training) corpus."""
    counts: dict[str, dict[str, int]] = {name: {} for name in era_names}
    for tokens, label in zip(token_lists, class_labels):
        era = era_names[label]
        bucket = counts[era]
        for tok in tokens:
            bucket[tok] = bucket.get(tok, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# Report and confusion artifacts
# ---------------------------------------------------------------------------


def report_to_dict(report: EvalReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "interval95": report.interval95,
        "n": report.n,
        "per_class": [
            {
                "label": c.label,
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
                "support": c.support,
            }
            for c in report.per_class
        ],
        "confusion": {
            "labels": report.confusion.labels,
            "counts": report.confusion.counts.tolist(),
        },
    }


def report_from_dict(raw: dict) -> EvalReport:
    cm = ConfusionMatrix(
        np.asarray(raw["confusion"]["counts"], dtype=np.int64),
        list(raw["confusion"]["labels"]),
    )
    per_class = [
        ClassMetrics(c["label"], c["precision"], c["recall"], c["f1"], c["support"])
        for c in raw["per_class"]
    ]
    return EvalReport(
        raw["accuracy"],
        raw["macro_precision"],
        raw["macro_recall"],
        raw["macro_f1"],
        per_class,
        raw["interval95"],
        cm,
        raw["n"],
    )


def write_report(report: EvalReport, path: str | Path, meta: dict | None = None) -> None:
    """Serialize with stable key order so identical runs hash identically."""
    payload = report_to_dict(report)
    if meta:
        payload["meta"] = meta
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8")


def read_report(path: str | Path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text("utf-8")))


def confusion_to_csv(cm: ConfusionMatrix, normalize: bool = False) -> str:
    """Counts as CSV (header = predicted labels, one row per actual).

    With ``normalize``, a second block of row-normalized fractions
    follows after a blank line; parsers read counts up to that line.
    """
    def esc(s: str) -> str:
        return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s

    lines = ["actual\\predicted," + ",".join(esc(l) for l in cm.labels)]
    for i, label in enumerate(cm.labels):
        lines.append(esc(label) + "," + ",".join(str(int(v)) for v in cm.counts[i]))
    if normalize:
        lines.append("")
        lines.append("row_fraction," + ",".join(esc(l) for l in cm.labels))
        for i, label in enumerate(cm.labels):
            row = cm.counts[i].astype(np.float64)
            total = row.sum()
            frac = row / total if total > 0 else row
            lines.append(esc(label) + "," + ",".join(f"{v:.6f}" for v in frac))
    return "\n".join(lines) + "\n"


def confusion_from_csv(text: str) -> ConfusionMatrix:
    lines = text.splitlines()
    header = lines[0].split(",")[1:]
    counts = []
    for line in lines[1:]:
        if not line.strip():
            break
        counts.append([int(v) for v in line.split(",")[1:]])
    return ConfusionMatrix(np.asarray(counts, dtype=np.int64), header)


def _heat_color(fraction: float) -> str:
    """White -> deep blue ramp."""
    r = int(round(255 - 205 * fraction))
    g = int(round(255 - 180 * fraction))
    b = int(round(255 - 100 * fraction))
    return f"#{r:02x}{g:02x}{b:02x}"


def confusion_to_svg(cm: ConfusionMatrix, normalize: bool = False, cell: int = 64) -> str:
    """Standalone SVG heatmap with per-cell value labels."""
    k = cm.n_classes
    margin_left, margin_top = 140, 60
    width = margin_left + k * cell + 20
    height = margin_top + k * cell + 20
    values = cm.counts.astype(np.float64)
    if normalize:
        row_sums = values.sum(axis=1, keepdims=True)
        row_sums[row_sums == 0] = 1.0
        values = values / row_sums
    vmax = values.max() if values.size and values.max() > 0 else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<style>text{font-family:sans-serif;font-size:11px}</style>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for j, label in enumerate(cm.labels):
        x = margin_left + j * cell + cell // 2
        parts.append(
            f'<text x="{x}" y="{margin_top - 8}" text-anchor="middle">{_xml_escape(label)}</text>'
        )
    for i, label in enumerate(cm.labels):
        y = margin_top + i * cell + cell // 2 + 4
        parts.append(
            f'<text x="{margin_left - 8}" y="{y}" text-anchor="end">{_xml_escape(label)}</text>'
        )
    for i in range(k):
        for j in range(k):
            frac = values[i, j] / vmax
            x = margin_left + j * cell
            y = margin_top + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{_heat_color(frac)}" stroke="#888"/>'
            )
            text = f"{values[i, j]:.2f}" if normalize else str(int(cm.counts[i, j]))
            color = "white" if frac > 0.6 else "black"
            parts.append(
                f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" text-anchor="middle" '
                f'fill="{color}">{text}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_confusion(
    cm: ConfusionMatrix,
    csv_path: str | Path,
    svg_path: str | Path,
    normalize: bool = False,
) -> None:
    """Write the confusion CSV and SVG heatmap artifacts."""
    Path(csv_path).write_text(confusion_to_csv(cm, normalize), encoding="utf-8")
    Path(svg_path).write_text(confusion_to_svg(cm, normalize), encoding="utf-8")
