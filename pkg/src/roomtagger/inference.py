"""Image preprocessing, single-image prediction, and score formatting.

Preprocessing decodes raw bytes, forces 3 channels, stretches to the target
size with bilinear interpolation (no crop, no pad, aspect ratio not
preserved), and scales pixel values to [-1, 1] via x / 127.5 - 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .labels import CANONICAL_LABELS, ClassLabel
from .validation import check_scores

RESIZE_MODES = ("bilinear",)
VALUE_RANGES = ("unit_symmetric",)  # x / 127.5 - 1 -> [-1, 1]

# Per-class probabilities keyed in canonical label order.
PredictionScores = dict


class ImageDecodeError(ValueError):
    """Bytes do not decode into a usable raster image."""


@dataclass(frozen=True)
class PreprocessConfig:
    """Target geometry and pixel scaling convention, recorded in bundles."""

    target_height: int = 299
    target_width: int = 299
    channels: int = 3
    resize: str = "bilinear"
    value_range: str = "unit_symmetric"

    def __post_init__(self):
        if self.target_height <= 0 or self.target_width <= 0:
            raise ValueError("target dimensions must be positive")
        if self.channels != 3:
            raise ValueError("only 3-channel output is supported")
        if self.resize not in RESIZE_MODES:
            raise ValueError(f"unsupported resize mode {self.resize!r}")
        if self.value_range not in VALUE_RANGES:
            raise ValueError(f"unsupported value range {self.value_range!r}")

    def to_dict(self) -> dict:
        return {
            "target_height": self.target_height,
            "target_width": self.target_width,
            "channels": self.channels,
            "resize": self.resize,
            "value_range": self.value_range,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PreprocessConfig":
        return cls(**data)


def preprocess(image_bytes: bytes, config: PreprocessConfig = PreprocessConfig()) -> np.ndarray:
    """Decode, resize, and scale raw image bytes into a float32 input tensor.

    Grayscale images are channel-replicated, alpha channels dropped. Raises
    ImageDecodeError for undecodable bytes or degenerate dimensions.
    """
    try:
        image = Image.open(io.BytesIO(image_bytes))
        image.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"could not decode image bytes: {exc}") from exc
    if image.width <= 0 or image.height <= 0:
        raise ImageDecodeError(
            f"degenerate image dimensions {image.width}x{image.height}"
        )
    rgb = image.convert("RGB")
    resized = rgb.resize((config.target_width, config.target_height), Image.BILINEAR)
    array = np.asarray(resized, dtype=np.float32)
    return array / 127.5 - 1.0


def load_image_arrays(manifest, config: PreprocessConfig = PreprocessConfig()):
    """Preprocess every manifest image: (images, class_indices) arrays."""
    images, labels = [], []
    for record in manifest.records:
        images.append(preprocess(record.path.read_bytes(), config))
        labels.append(CANONICAL_LABELS.index(record.label))
    return np.stack(images), np.asarray(labels, dtype=np.int64)


def predict(bundle, image_bytes: bytes) -> PredictionScores:
    """Preprocess then run the bundled model; scores in canonical label order."""
    from .models import forward

    image = preprocess(image_bytes, bundle.preprocess)
    probs = forward(bundle.model, image[np.newaxis], training_mode=False)[0]
    return {label: float(p) for label, p in zip(CANONICAL_LABELS, probs)}


def top_label(scores: PredictionScores) -> ClassLabel:
    """Highest-scoring class; exact ties go to the earliest canonical label."""
    checked = check_scores(scores)
    best = CANONICAL_LABELS[0]
    for label in CANONICAL_LABELS[1:]:
        if checked[label] > checked[best]:
            best = label
    return best


def format_scores_json(scores: PredictionScores) -> str:
    """Canonical wire rendering: fixed key order, 4 fractional digits."""
    checked = check_scores(scores)
    body = ", ".join(
        f'"{label.value}": {checked[label]:.4f}' for label in CANONICAL_LABELS
    )
    return "{" + body + "}"
