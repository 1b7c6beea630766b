"""Room-scene image classification pipeline.

Balanced dataset preparation, a customizable convolutional classifier with
two-stage fine-tuning, per-class evaluation, versioned model bundles, and a
REST serving layer. The primary entry points are :class:`RoomTagger`
(scikit-learn style estimator), the ``roomtagger`` command line, and
:func:`create_app` for serving.
"""

import importlib
import os

# Must be set before TensorFlow is first imported: silence C++ logs and turn
# off oneDNN kernels, whose computation order varies run to run.
os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
os.environ.setdefault("TF_ENABLE_ONEDNN_OPTS", "0")

from .labels import CANONICAL_LABELS, ClassLabel, map_raw_tag
from .manifest import (
    DatasetManifest,
    ImageRecord,
    SplitSpec,
    load_manifest,
    split,
    undersample,
)

__version__ = "0.1.0"

# Heavy modules (TensorFlow-backed) are loaded on first attribute access so
# that data-only workflows never pay the framework import cost.
_LAZY_EXPORTS = {
    "ArchitectureConfig": "models",
    "BackboneKind": "models",
    "ModelHandle": "models",
    "Stage": "models",
    "build_classifier": "models",
    "set_stage_trainability": "models",
    "forward": "models",
    "TrainingConfig": "training",
    "TrainReport": "training",
    "categorical_cross_entropy": "training",
    "rmsprop_step": "training",
    "run_two_stage": "training",
    "train_stage": "training",
    "seed_all": "training",
    "EvalReport": "metrics",
    "confusion": "metrics",
    "per_class_metrics": "metrics",
    "evaluate": "metrics",
    "PreprocessConfig": "inference",
    "preprocess": "inference",
    "predict": "inference",
    "top_label": "inference",
    "ModelBundle": "bundle",
    "export_bundle": "bundle",
    "load_bundle": "bundle",
    "RoomTagger": "estimator",
    "ServiceConfig": "service",
    "create_app": "service",
}

__all__ = [
    "CANONICAL_LABELS",
    "ClassLabel",
    "DatasetManifest",
    "ImageRecord",
    "SplitSpec",
    "load_manifest",
    "map_raw_tag",
    "split",
    "undersample",
    *sorted(_LAZY_EXPORTS),
]


def __getattr__(name):
    module = _LAZY_EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(importlib.import_module(f".{module}", __name__), name)
