"""Input validation helpers shared across model, metrics, and serving code."""

from __future__ import annotations

import numpy as np

from .labels import CANONICAL_LABELS, ClassLabel, coerce_label


def check_image_batch(batch, input_shape: tuple[int, int, int]) -> np.ndarray:
    """Validate a (n, height, width, channels) float batch; returns float32."""
    array = np.asarray(batch)
    if array.ndim != 4:
        raise ValueError(
            f"expected a 4-d image batch (n, h, w, c), got shape {array.shape}"
        )
    if tuple(array.shape[1:]) != tuple(input_shape):
        raise ValueError(
            f"batch shape {array.shape[1:]} does not match the model input "
            f"shape {tuple(input_shape)}"
        )
    return np.ascontiguousarray(array, dtype=np.float32)


def check_probability_rows(array, num_classes: int, atol: float = 1e-5) -> np.ndarray:
    """Validate (n, num_classes) rows that must lie on the probability simplex."""
    probs = np.asarray(array, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != num_classes:
        raise ValueError(
            f"expected shape (n, {num_classes}) probability rows, got {probs.shape}"
        )
    if np.any(probs < -atol) or np.any(probs > 1 + atol):
        raise ValueError("probability entries fall outside [0, 1]")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > max(atol, 1e-5) * 10):
        raise ValueError("probability rows do not sum to 1")
    return probs


def as_label_list(values) -> list[ClassLabel]:
    """Coerce an iterable of labels/strings into ClassLabel members."""
    return [coerce_label(value) for value in values]


def check_scores(scores) -> dict[ClassLabel, float]:
    """Validate a six-key score mapping; returns it keyed by ClassLabel."""
    coerced = {coerce_label(key): float(value) for key, value in scores.items()}
    missing = [l.value for l in CANONICAL_LABELS if l not in coerced]
    if missing:
        raise ValueError(f"scores missing classes: {', '.join(missing)}")
    if len(coerced) != len(CANONICAL_LABELS):
        raise ValueError(f"scores must have exactly {len(CANONICAL_LABELS)} entries")
    for label, value in coerced.items():
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"score for '{label.value}' outside [0, 1]: {value}")
    return coerced
