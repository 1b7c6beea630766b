"""scikit-learn style estimator wrapping the full training pipeline."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .inference import PreprocessConfig, load_image_arrays, preprocess
from .labels import CANONICAL_LABELS, coerce_label
from .manifest import DatasetManifest, ImageRecord, SplitSpec, load_manifest
from .manifest import split as split_manifest
from .manifest import undersample as undersample_manifest


class RoomTagger(BaseEstimator, ClassifierMixin):
    """Six-way room-scene classifier with two-stage fine-tuning.

    ``fit`` accepts a :class:`DatasetManifest`, a path to a manifest CSV, or
    a sequence of image paths together with ``y`` labels. ``predict`` and
    ``predict_proba`` accept image file paths, raw encoded bytes, PIL images,
    or (h, w, 3) uint8 arrays.

    Parameters mirror the training pipeline's defaults: an ImageNet-initialized
    backbone at 299x299x3, head width 1024, dropout 0.5, RMSProp at learning
    rate 1e-4 with discounting factor 0.9, batch size 64, and 50 epochs per
    stage. Use ``backbone="tiny_test", pretrained=False`` with small epoch
    counts for desk-scale runs.
    """

    def __init__(
        self,
        backbone="inception_v3",
        pretrained=True,
        input_size=299,
        head_width=1024,
        dropout_rate=0.5,
        learning_rate=1e-4,
        rho=0.9,
        epsilon=1e-7,
        batch_size=64,
        epochs_stage1=50,
        epochs_stage2=50,
        balance=True,
        validation_fraction=0.1,
        seed=0,
    ):
        self.backbone = backbone
        self.pretrained = pretrained
        self.input_size = input_size
        self.head_width = head_width
        self.dropout_rate = dropout_rate
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.epochs_stage1 = epochs_stage1
        self.epochs_stage2 = epochs_stage2
        self.balance = balance
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig(
            target_height=self.input_size, target_width=self.input_size
        )

    def _as_manifest(self, X, y) -> DatasetManifest:
        if isinstance(X, DatasetManifest):
            if y is not None:
                raise ValueError("y must be None when X is already a manifest")
            return X
        if isinstance(X, (str, Path)):
            if y is not None:
                raise ValueError("y must be None when X is a manifest CSV path")
            return load_manifest(X)
        if y is None:
            raise ValueError("y is required when X is a sequence of image paths")
        labels = [coerce_label(value) for value in y]
        if len(labels) != len(X):
            raise ValueError(f"X has {len(X)} paths but y has {len(labels)} labels")
        records = [
            ImageRecord(path=Path(p).resolve(), raw_tag=label.value, label=label)
            for p, label in zip(X, labels)
        ]
        return DatasetManifest.from_records(records)

    def fit(self, X, y=None):
        """Balance, split, build, and run both training stages."""
        from .models import ArchitectureConfig, build_classifier
        from .training import TrainingConfig, run_two_stage, seed_all

        manifest = self._as_manifest(X, y)
        if self.balance:
            manifest = undersample_manifest(manifest, seed=self.seed)
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        train_manifest, val_manifest = split_manifest(
            manifest,
            SplitSpec(train_fraction=1.0 - self.validation_fraction, seed=self.seed),
        )

        preprocess_config = self._preprocess_config()
        train_data = load_image_arrays(train_manifest, preprocess_config)
        val_data = load_image_arrays(val_manifest, preprocess_config)

        architecture = ArchitectureConfig(
            backbone=self.backbone,
            input_shape=(self.input_size, self.input_size, 3),
            dropout_rate=self.dropout_rate,
            head_width=self.head_width,
            pretrained=self.pretrained,
        )
        training_config = TrainingConfig(
            learning_rate=self.learning_rate,
            rho=self.rho,
            epsilon=self.epsilon,
            batch_size=self.batch_size,
            epochs_stage1=self.epochs_stage1,
            epochs_stage2=self.epochs_stage2,
            seed=self.seed,
        )
        seed_all(self.seed)
        model = build_classifier(architecture)
        model, report = run_two_stage(model, train_data, val_data, training_config)

        self.model_ = model
        self.report_ = report
        self.classes_ = np.asarray([label.value for label in CANONICAL_LABELS])
        return self

    def _to_input(self, item) -> np.ndarray:
        config = self._preprocess_config()
        if isinstance(item, (str, Path)):
            return preprocess(Path(item).read_bytes(), config)
        if isinstance(item, (bytes, bytearray)):
            return preprocess(bytes(item), config)
        if isinstance(item, Image.Image):
            return preprocess(_encode_png(item), config)
        array = np.asarray(item)
        if array.ndim == 3 and array.shape[-1] == 3:
            return preprocess(_encode_png(Image.fromarray(array.astype(np.uint8))), config)
        raise ValueError(
            "predict inputs must be image paths, encoded bytes, PIL images, "
            f"or (h, w, 3) arrays; got {type(item).__name__}"
        )

    def predict_proba(self, X) -> np.ndarray:
        """Softmax probability rows in canonical class order."""
        from .models import forward

        check_is_fitted(self, "model_")
        batch = np.stack([self._to_input(item) for item in X])
        return forward(self.model_, batch, training_mode=False)

    def predict(self, X) -> np.ndarray:
        """Predicted class names; ties resolve to the earliest canonical label."""
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]

    def score(self, X, y, sample_weight=None) -> float:
        y = np.asarray([coerce_label(value).value for value in y])
        return float(np.average(self.predict(X) == y, weights=sample_weight))

    def export_bundle(self, path, extra_metadata=None):
        """Serialize the fitted model as a bundle directory for serving."""
        from .bundle import export_bundle

        check_is_fitted(self, "model_")
        return export_bundle(
            self.model_,
            self._preprocess_config(),
            path,
            seed=self.seed,
            extra_metadata=extra_metadata,
        )

    @classmethod
    def from_bundle(cls, path) -> "RoomTagger":
        """Rehydrate a fitted estimator from a bundle directory."""
        from .bundle import load_bundle

        bundle = load_bundle(path)
        architecture = bundle.model.architecture
        estimator = cls(
            backbone=architecture.backbone.value,
            pretrained=False,
            input_size=architecture.input_shape[0],
            head_width=architecture.head_width,
            dropout_rate=architecture.dropout_rate,
            seed=bundle.metadata.get("seed") or 0,
        )
        estimator.model_ = bundle.model
        estimator.report_ = None
        estimator.classes_ = np.asarray([label.value for label in CANONICAL_LABELS])
        return estimator


def _encode_png(image: Image.Image) -> bytes:
    import io

    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()
