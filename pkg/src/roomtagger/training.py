"""Two-stage fine-tuning loop: frozen-backbone warm-up, then end-to-end.

Stage one freezes the backbone and fits only the newly added head; stage two
unfreezes everything and continues. Optimization is RMSProp on a categorical
cross-entropy loss that consumes the softmax probabilities directly, with
probabilities clamped to [1e-7, 1 - 1e-7] for numerical safety.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import keras
import tensorflow as tf

from .models import ModelHandle, Stage, set_stage_trainability
from .seeding import GENERATOR_NAME, check_seed, derive_seed, make_rng

PROB_CLAMP = 1e-7
_STAGE_STREAM = {Stage.HEAD_ONLY: 1, Stage.FULL: 2}


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss or gradient)."""


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer, loss, and schedule hyperparameters."""

    learning_rate: float = 1e-4
    rho: float = 0.9
    epsilon: float = 1e-7
    batch_size: int = 64
    epochs_stage1: int = 50
    epochs_stage2: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs_stage1 < 0 or self.epochs_stage2 < 0:
            raise ValueError("epoch counts must be >= 0")
        object.__setattr__(self, "seed", check_seed(self.seed))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpochRecord:
    stage: str
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    seconds: float


@dataclass
class TrainReport:
    """Per-epoch telemetry plus the exact configuration that produced it."""

    records: list[EpochRecord] = field(default_factory=list)
    config: TrainingConfig | None = None
    generator: str = GENERATOR_NAME

    @property
    def seed(self) -> int | None:
        return None if self.config is None else self.config.seed

    def final_validation_accuracy(self) -> float:
        if not self.records:
            raise ValueError("empty training report")
        return self.records[-1].val_accuracy

    def write_jsonl(self, path) -> Path:
        """Line-delimited JSON: one run header record, then one per epoch."""
        out_path = Path(path)
        with out_path.open("w", encoding="utf-8") as handle:
            header = {
                "record": "run",
                "config": None if self.config is None else self.config.to_dict(),
                "generator": self.generator,
            }
            handle.write(json.dumps(header) + "\n")
            for record in self.records:
                handle.write(json.dumps({"record": "epoch", **asdict(record)}) + "\n")
        return out_path

    @classmethod
    def read_jsonl(cls, path) -> "TrainReport":
        report = cls()
        with Path(path).open("r", encoding="utf-8") as handle:
            for line in handle:
                data = json.loads(line)
                kind = data.pop("record")
                if kind == "run":
                    if data.get("config") is not None:
                        report.config = TrainingConfig(**data["config"])
                    report.generator = data.get("generator", GENERATOR_NAME)
                else:
                    report.records.append(EpochRecord(**data))
        return report


def seed_all(seed: int) -> None:
    """Seed every framework RNG and force deterministic kernel execution."""
    keras.utils.set_random_seed(check_seed(seed))
    tf.config.experimental.enable_op_determinism()


def one_hot(labels, num_classes: int) -> np.ndarray:
    indices = np.asarray(labels)
    if indices.ndim != 1:
        raise ValueError(f"expected 1-d class indices, got shape {indices.shape}")
    if np.any(indices < 0) or np.any(indices >= num_classes):
        raise ValueError(f"class indices must lie in [0, {num_classes})")
    return np.eye(num_classes, dtype=np.float32)[indices.astype(np.int64)]


def categorical_cross_entropy(probs, targets) -> float:
    """Mean negative log-probability of the true class.

    `probs` holds probability rows; `targets` is either a one-hot matrix of
    the same shape or a vector of class indices. Probabilities are clamped
    to [1e-7, 1 - 1e-7] before the log, so the result is always finite and
    non-negative.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError(f"expected (n, k) probability rows, got shape {p.shape}")
    t = np.asarray(targets)
    if t.ndim == 1:
        t = one_hot(t, p.shape[1]).astype(np.float64)
    elif t.shape != p.shape:
        raise ValueError(
            f"targets shape {t.shape} does not match probabilities {p.shape}"
        )
    clamped = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(np.sum(t * np.log(clamped), axis=-1)))


def rmsprop_step(param, grad, state, config: TrainingConfig):
    """One RMSProp update: returns (new_param, new_state).

    state' = rho * state + (1 - rho) * grad**2
    param' = param - lr * grad / sqrt(state' + epsilon)
    """
    p = np.asarray(param, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    s = np.asarray(state, dtype=np.float64)
    if g.shape != p.shape or s.shape != p.shape:
        raise ValueError(
            f"shape mismatch: param {p.shape}, grad {g.shape}, state {s.shape}"
        )
    if not np.all(np.isfinite(g)):
        bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
        raise TrainingError(
            f"non-finite gradient: {bad} of {g.size} entries are inf/nan"
        )
    new_state = config.rho * s + (1.0 - config.rho) * np.square(g)
    new_param = p - config.learning_rate * g / np.sqrt(new_state + config.epsilon)
    return new_param, new_state


def _clamped_log_loss(targets_one_hot, probs):
    # tf mirror of categorical_cross_entropy, used inside the training step
    clamped = tf.clip_by_value(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -tf.reduce_mean(
        tf.reduce_sum(targets_one_hot * tf.math.log(clamped), axis=-1)
    )


def _check_data(name: str, data, num_classes: int, allow_empty: bool = False):
    x, y = data
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y)
    if len(x) != len(y):
        raise ValueError(f"{name}: {len(x)} images but {len(y)} labels")
    if not allow_empty and len(x) == 0:
        raise ValueError(f"{name}: empty dataset")
    if len(y) and (y.min() < 0 or y.max() >= num_classes):
        raise ValueError(f"{name}: class indices must lie in [0, {num_classes})")
    return x, y.astype(np.int64)


def _evaluate_arrays(network, x, y, batch_size: int) -> tuple[float, float]:
    losses, correct = 0.0, 0
    y1h = one_hot(y, int(network.output.shape[-1]))
    for start in range(0, len(x), batch_size):
        xb = x[start : start + batch_size]
        yb = y1h[start : start + batch_size]
        probs = network(tf.constant(xb), training=False)
        losses += float(_clamped_log_loss(tf.constant(yb), probs)) * len(xb)
        correct += int(np.sum(np.argmax(np.asarray(probs), axis=1) == y[start : start + batch_size]))
    return losses / len(x), correct / len(x)


def train_stage(
    model: ModelHandle,
    stage: Stage,
    train_data,
    val_data,
    config: TrainingConfig,
) -> tuple[ModelHandle, TrainReport]:
    """Run one stage: seeded shuffled mini-batches for the stage's epoch count.

    `train_data` / `val_data` are (images, class_indices) array pairs, with
    images already preprocessed to the model's input range. Trainability is
    set from `stage` before the first step, so a head-only stage leaves every
    backbone weight byte-for-byte untouched.
    """
    stage = Stage(stage)
    num_classes = model.architecture.num_classes
    x_train, y_train = _check_data("train_data", train_data, num_classes)
    x_val, y_val = _check_data("val_data", val_data, num_classes)

    epochs = config.epochs_stage1 if stage is Stage.HEAD_ONLY else config.epochs_stage2
    report = TrainReport(config=config)
    if epochs == 0:
        return model, report

    stage_seed = derive_seed(config.seed, _STAGE_STREAM[stage])
    seed_all(stage_seed)
    shuffle_rng = make_rng(config.seed, _STAGE_STREAM[stage])

    set_stage_trainability(model, stage)
    optimizer = keras.optimizers.RMSprop(
        learning_rate=config.learning_rate, rho=config.rho, epsilon=config.epsilon
    )
    network = model.network
    y_train_1h = one_hot(y_train, num_classes)

    for epoch in range(epochs):
        started = time.perf_counter()
        order = shuffle_rng.permutation(len(x_train))
        loss_sum, correct = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            xb = tf.constant(x_train[batch])
            yb = tf.constant(y_train_1h[batch])
            with tf.GradientTape() as tape:
                probs = network(xb, training=True)
                loss = _clamped_log_loss(yb, probs)
            loss_value = float(loss)
            if not np.isfinite(loss_value):
                raise TrainingError(
                    f"non-finite loss at stage={stage.value} epoch={epoch} "
                    f"step={start // config.batch_size}: {loss_value}"
                )
            gradients = tape.gradient(loss, network.trainable_weights)
            optimizer.apply_gradients(zip(gradients, network.trainable_weights))
            loss_sum += loss_value * len(batch)
            correct += int(np.sum(np.argmax(np.asarray(probs), axis=1) == y_train[batch]))

        val_loss, val_accuracy = _evaluate_arrays(network, x_val, y_val, config.batch_size)
        report.records.append(
            EpochRecord(
                stage=stage.value,
                epoch=epoch,
                train_loss=loss_sum / len(x_train),
                train_accuracy=correct / len(x_train),
                val_loss=val_loss,
                val_accuracy=val_accuracy,
                seconds=time.perf_counter() - started,
            )
        )
    return model, report


def run_two_stage(
    model: ModelHandle,
    train_data,
    val_data,
    config: TrainingConfig,
) -> tuple[ModelHandle, TrainReport]:
    """Head-only stage followed by the end-to-end stage; consolidated report."""
    model, first = train_stage(model, Stage.HEAD_ONLY, train_data, val_data, config)
    model, second = train_stage(model, Stage.FULL, train_data, val_data, config)
    return model, TrainReport(records=first.records + second.records, config=config)
