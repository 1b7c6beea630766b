"""Per-class precision/recall/F1 from a six-way confusion matrix."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labels import CANONICAL_LABELS, ClassLabel
from .validation import as_label_list

logger = logging.getLogger(__name__)

NUM_CLASSES = len(CANONICAL_LABELS)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    """Per-class scores, macro averages, and the confusion matrix behind them."""

    per_class: dict[ClassLabel, ClassMetrics]
    confusion: np.ndarray
    sample_count: int
    bundle_id: str | None = None
    skipped: int = 0
    macro: ClassMetrics = field(init=False)

    def __post_init__(self):
        n = len(self.per_class)
        self.macro = ClassMetrics(
            precision=sum(m.precision for m in self.per_class.values()) / n,
            recall=sum(m.recall for m in self.per_class.values()) / n,
            f1=sum(m.f1 for m in self.per_class.values()) / n,
        )

    def to_dict(self) -> dict:
        return {
            "per_class": {
                label.value: {
                    "precision": metrics.precision,
                    "recall": metrics.recall,
                    "f1": metrics.f1,
                }
                for label, metrics in self.per_class.items()
            },
            "macro": {
                "precision": self.macro.precision,
                "recall": self.macro.recall,
                "f1": self.macro.f1,
            },
            "confusion": self.confusion.tolist(),
            "sample_count": self.sample_count,
            "skipped": self.skipped,
            "bundle_id": self.bundle_id,
        }

    def write_json(self, path) -> Path:
        out_path = Path(path)
        out_path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return out_path

    def table(self) -> str:
        """Aligned text table: classes as columns, one row per metric.

        Values are displayed at 2 decimals; the stored report keeps full
        precision.
        """
        headers = [label.value.capitalize() for label in CANONICAL_LABELS]
        rows = [
            ("Precision", [self.per_class[l].precision for l in CANONICAL_LABELS]),
            ("Recall", [self.per_class[l].recall for l in CANONICAL_LABELS]),
            ("F1-score", [self.per_class[l].f1 for l in CANONICAL_LABELS]),
        ]
        name_width = max(len("Class"), *(len(name) for name, _ in rows))
        col_widths = [max(len(h), 4) for h in headers]
        lines = [
            "  ".join(
                ["Class".ljust(name_width)]
                + [h.rjust(w) for h, w in zip(headers, col_widths)]
            )
        ]
        for name, values in rows:
            lines.append(
                "  ".join(
                    [name.ljust(name_width)]
                    + [f"{v:.2f}".rjust(w) for v, w in zip(values, col_widths)]
                )
            )
        return "\n".join(lines)


def confusion(predictions, truths) -> np.ndarray:
    """Count matrix: entry (i, j) = samples of true class i predicted as j.

    Classes are indexed in canonical label order. Inputs must be non-empty
    and the same length.
    """
    predicted = as_label_list(predictions)
    actual = as_label_list(truths)
    if len(predicted) != len(actual):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(actual)} truths"
        )
    if not predicted:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    matrix = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    index = {label: i for i, label in enumerate(CANONICAL_LABELS)}
    for pred, true in zip(predicted, actual):
        matrix[index[true], index[pred]] += 1
    return matrix


def per_class_metrics(
    cm: np.ndarray, bundle_id: str | None = None, skipped: int = 0
) -> EvalReport:
    """Precision, recall, and F1 per class; zero denominators yield 0.0."""
    matrix = np.asarray(cm, dtype=np.int64)
    if matrix.shape != (NUM_CLASSES, NUM_CLASSES):
        raise ValueError(
            f"expected a {NUM_CLASSES}x{NUM_CLASSES} confusion matrix, "
            f"got {matrix.shape}"
        )
    if np.any(matrix < 0):
        raise ValueError("confusion matrix entries must be non-negative")

    per_class: dict[ClassLabel, ClassMetrics] = {}
    diag = np.diag(matrix)
    predicted_totals = matrix.sum(axis=0)
    true_totals = matrix.sum(axis=1)
    for i, label in enumerate(CANONICAL_LABELS):
        tp = float(diag[i])
        precision = tp / float(predicted_totals[i]) if predicted_totals[i] else 0.0
        recall = tp / float(true_totals[i]) if true_totals[i] else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[label] = ClassMetrics(precision=precision, recall=recall, f1=f1)
    return EvalReport(
        per_class=per_class,
        confusion=matrix,
        sample_count=int(matrix.sum()),
        bundle_id=bundle_id,
        skipped=skipped,
    )


def evaluate(bundle, test_manifest, batch_size: int = 32, on_error: str = "abort") -> EvalReport:
    """Predict every manifest image and score against its labels.

    `on_error` is ``abort`` (default: re-raise on the first unreadable image)
    or ``skip`` (log a warning and leave the image out of the counts).
    """
    from .inference import preprocess
    from .models import forward

    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    if len(test_manifest) == 0:
        raise ValueError("cannot evaluate an empty manifest")

    predictions: list[ClassLabel] = []
    truths: list[ClassLabel] = []
    skipped = 0
    pending_images: list[np.ndarray] = []
    pending_labels: list[ClassLabel] = []

    def flush():
        if not pending_images:
            return
        probs = forward(bundle.model, np.stack(pending_images), training_mode=False)
        for row, label in zip(probs, pending_labels):
            predictions.append(CANONICAL_LABELS[int(np.argmax(row))])
            truths.append(label)
        pending_images.clear()
        pending_labels.clear()

    for record in test_manifest.records:
        try:
            image = preprocess(record.path.read_bytes(), bundle.preprocess)
        except (OSError, ValueError) as exc:
            if on_error == "abort":
                raise
            skipped += 1
            logger.warning("skipping unreadable image %s: %s", record.path, exc)
            continue
        pending_images.append(image)
        pending_labels.append(record.label)
        if len(pending_images) >= batch_size:
            flush()
    flush()

    if not predictions:
        raise ValueError("no readable images in manifest; nothing to evaluate")
    return per_class_metrics(
        confusion(predictions, truths), bundle_id=bundle.bundle_id, skipped=skipped
    )
