"""Classifier construction: pluggable convolutional backbone + custom head.

The head replaces the backbone's original classification block with global
2D average pooling, a fully connected layer, dropout, and a softmax layer.
Backbone and head form a two-way weight partition with independent
trainability, which is what the two training stages toggle.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

import keras

from .validation import check_image_batch

HEAD_ACTIVATION = "relu"
HEAD_LAYER_NAMES = ("head_pool", "head_fc", "head_dropout", "head_softmax")


class UnsupportedBackboneError(ValueError):
    """Requested backbone kind is not one of the supported architectures."""


class PretrainedWeightsError(RuntimeError):
    """Pretrained backbone weights were requested but cannot be provided."""


class BackboneKind(str, Enum):
    INCEPTION_V3 = "inception_v3"
    RESNET = "resnet"
    VGG = "vgg"
    XCEPTION = "xception"
    TINY_TEST = "tiny_test"

    def __str__(self) -> str:
        return self.value


class Stage(str, Enum):
    """Which weight partitions a training stage is allowed to update."""

    HEAD_ONLY = "head_only"
    FULL = "full"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ArchitectureConfig:
    """Backbone choice plus the custom head's parameters."""

    backbone: BackboneKind = BackboneKind.INCEPTION_V3
    input_shape: tuple[int, int, int] = (299, 299, 3)
    num_classes: int = 6
    dropout_rate: float = 0.5
    head_width: int = 1024
    pretrained: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "backbone", BackboneKind(str(self.backbone)))
        except ValueError:
            raise UnsupportedBackboneError(
                f"unsupported backbone {self.backbone!r}; expected one of "
                f"{[k.value for k in BackboneKind]}"
            ) from None
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        if len(self.input_shape) != 3 or any(d <= 0 for d in self.input_shape):
            raise ValueError(f"input_shape must be 3 positive dims, got {self.input_shape}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.head_width < 1:
            raise ValueError(f"head_width must be >= 1, got {self.head_width}")

    def to_dict(self) -> dict:
        return {
            "backbone": self.backbone.value,
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "dropout_rate": self.dropout_rate,
            "head_width": self.head_width,
            "pretrained": self.pretrained,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArchitectureConfig":
        return cls(
            backbone=data["backbone"],
            input_shape=tuple(data["input_shape"]),
            num_classes=data["num_classes"],
            dropout_rate=data["dropout_rate"],
            head_width=data["head_width"],
            pretrained=data["pretrained"],
        )


@dataclass
class ModelHandle:
    """A built classifier plus its backbone/head weight partition."""

    architecture: ArchitectureConfig
    network: keras.Model
    backbone: keras.Model
    head_layers: tuple = field(default_factory=tuple)
    head_activation: str = HEAD_ACTIVATION

    @property
    def backbone_variables(self) -> list:
        return list(self.backbone.weights)

    @property
    def head_variables(self) -> list:
        return [w for layer in self.head_layers for w in layer.weights]

    @property
    def trainable_variables(self) -> list:
        return list(self.network.trainable_weights)

    def backbone_weight_values(self) -> list[np.ndarray]:
        return [np.asarray(w) for w in self.backbone.get_weights()]

    def weight_digest(self, partition: str = "all") -> str:
        """SHA-256 over the raw bytes of a weight partition, for change checks."""
        variables = {
            "all": self.network.weights,
            "backbone": self.backbone_variables,
            "head": self.head_variables,
        }[partition]
        digest = hashlib.sha256()
        for variable in variables:
            digest.update(np.ascontiguousarray(variable.numpy()).tobytes())
        return digest.hexdigest()


def _tiny_backbone(input_shape: tuple[int, int, int]) -> keras.Model:
    # A few convolution + pooling stages (~9e4 parameters), randomly
    # initialized; honors the same feature-extractor contract as the large
    # backbones so the full pipeline can run at desk scale.
    conv = dict(padding="same", activation="relu", kernel_initializer="he_normal")
    inputs = keras.Input(shape=input_shape)
    x = keras.layers.Conv2D(24, 5, strides=4, name="features_conv1", **conv)(inputs)
    x = keras.layers.MaxPooling2D(name="features_pool1")(x)
    x = keras.layers.Conv2D(64, 3, strides=2, name="features_conv2", **conv)(x)
    x = keras.layers.MaxPooling2D(name="features_pool2")(x)
    x = keras.layers.Conv2D(128, 3, name="features_conv3", **conv)(x)
    return keras.Model(inputs, x, name="tiny_test")


def _build_backbone(config: ArchitectureConfig) -> keras.Model:
    if config.backbone is BackboneKind.TINY_TEST:
        if config.pretrained:
            raise PretrainedWeightsError(
                "tiny_test has no published pretrained weights; "
                "build it with pretrained=False"
            )
        return _tiny_backbone(config.input_shape)

    factories = {
        BackboneKind.INCEPTION_V3: keras.applications.InceptionV3,
        BackboneKind.RESNET: keras.applications.ResNet50,
        BackboneKind.VGG: keras.applications.VGG16,
        BackboneKind.XCEPTION: keras.applications.Xception,
    }
    factory = factories[config.backbone]
    weights = "imagenet" if config.pretrained else None
    try:
        return factory(
            include_top=False, weights=weights, input_shape=config.input_shape
        )
    except Exception as exc:
        if config.pretrained:
            raise PretrainedWeightsError(
                f"could not obtain pretrained weights for "
                f"'{config.backbone.value}': {exc}"
            ) from exc
        raise


def build_classifier(config: ArchitectureConfig) -> ModelHandle:
    """Build the classifier: backbone features -> pool -> fc -> dropout -> softmax.

    The backbone keeps its published weights when `pretrained` is set; the
    head is always freshly initialized (fully connected layer he_normal, the
    softmax layer zero so early updates are consistent across classes).
    Initialization draws from the global seeded RNG; call
    :func:`roomtagger.training.seed_all` first for reproducible builds.
    """
    backbone = _build_backbone(config)
    inputs = keras.Input(shape=config.input_shape, name="image")
    features = backbone(inputs)
    x = keras.layers.GlobalAveragePooling2D(name="head_pool")(features)
    x = keras.layers.Dense(
        config.head_width,
        activation=HEAD_ACTIVATION,
        kernel_initializer="he_normal",
        name="head_fc",
    )(x)
    x = keras.layers.Dropout(config.dropout_rate, name="head_dropout")(x)
    outputs = keras.layers.Dense(
        config.num_classes,
        activation="softmax",
        kernel_initializer="zeros",
        name="head_softmax",
    )(x)
    network = keras.Model(inputs, outputs, name="room_classifier")
    head_layers = tuple(network.get_layer(name) for name in HEAD_LAYER_NAMES)
    return ModelHandle(
        architecture=config,
        network=network,
        backbone=backbone,
        head_layers=head_layers,
    )


def set_stage_trainability(model: ModelHandle, stage: Stage) -> ModelHandle:
    """Freeze or unfreeze the backbone partition; the head is always trainable."""
    stage = Stage(stage)
    model.backbone.trainable = stage is Stage.FULL
    for layer in model.head_layers:
        layer.trainable = True
    return model


def forward(model: ModelHandle, batch, training_mode: bool = False) -> np.ndarray:
    """Run the network on a preprocessed batch; rows are softmax probabilities.

    Dropout is active only when `training_mode` is set; with it off the
    output is a deterministic function of (weights, input).
    """
    array = check_image_batch(batch, model.architecture.input_shape)
    output = model.network(array, training=training_mode)
    return np.asarray(output)


def rebuild_for_inference(config: ArchitectureConfig) -> ModelHandle:
    """Fresh, non-pretrained build of `config` whose weights will be restored."""
    return build_classifier(replace(config, pretrained=False))
