"""Versioned on-disk model bundles shared by trainer, evaluator, and server.

Bundle directory layout:

    weights.bin          raw little-endian weight tensors, concatenated in
                         network weight order (C-contiguous)
    weights.bin.sha256   hex SHA-256 of weights.bin
    architecture.json    architecture descriptor, per-tensor weight manifest
                         (name, shape, dtype), and creation metadata
    labels.json          output class order (must equal the canonical order)
    preprocess.json      preprocessing configuration used at training time
    VERSION              bundle format version string

Bundles contain no timestamps, so two runs with the same seed and data
produce byte-identical directories.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import keras

from .inference import PreprocessConfig
from .labels import CANONICAL_LABELS, ClassLabel
from .models import (
    HEAD_ACTIVATION,
    ArchitectureConfig,
    ModelHandle,
    rebuild_for_inference,
)
from .seeding import GENERATOR_NAME

BUNDLE_FORMAT_VERSION = "1"
WEIGHTS_FILE = "weights.bin"
CHECKSUM_FILE = "weights.bin.sha256"
ARCHITECTURE_FILE = "architecture.json"
LABELS_FILE = "labels.json"
PREPROCESS_FILE = "preprocess.json"
VERSION_FILE = "VERSION"


class BundleError(ValueError):
    """Bundle cannot be written or read."""


class BundleVersionError(BundleError):
    """Bundle format version does not match this library."""


class BundleIntegrityError(BundleError):
    """Weight payload is corrupt or inconsistent with its manifest."""


@dataclass
class ModelBundle:
    """A loaded (or freshly exported) bundle and its resident model."""

    path: Path
    version: str
    model: ModelHandle
    preprocess: PreprocessConfig
    labels: tuple[ClassLabel, ...]
    metadata: dict

    @property
    def bundle_id(self) -> str:
        checksum = self.metadata.get("weights_checksum", "")
        return f"sha256:{checksum[:12]}" if checksum else "unversioned"


def config_hash(architecture: ArchitectureConfig, preprocess: PreprocessConfig) -> str:
    payload = json.dumps(
        {"architecture": architecture.to_dict(), "preprocess": preprocess.to_dict()},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _weight_entries(network) -> list[dict]:
    entries = []
    for variable in network.weights:
        array = np.asarray(variable)
        entries.append(
            {
                "name": variable.path,
                "shape": list(array.shape),
                "dtype": np.dtype(array.dtype).newbyteorder("<").str,
            }
        )
    return entries


def export_bundle(
    model: ModelHandle,
    preprocess: PreprocessConfig,
    path,
    seed: int | None = None,
    extra_metadata: dict | None = None,
) -> ModelBundle:
    """Write `model` to `path` as a bundle directory; returns the live handle."""
    bundle_dir = Path(path)
    bundle_dir.mkdir(parents=True, exist_ok=True)

    payload = bytearray()
    for variable in model.network.weights:
        array = np.ascontiguousarray(variable.numpy())
        payload.extend(array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes())
    checksum = hashlib.sha256(bytes(payload)).hexdigest()

    metadata = {
        "seed": seed,
        "config_hash": config_hash(model.architecture, preprocess),
        "weights_checksum": checksum,
        "head_activation": model.head_activation,
        "generator": GENERATOR_NAME,
        "keras_version": keras.__version__,
    }
    if extra_metadata:
        metadata.update(extra_metadata)

    (bundle_dir / WEIGHTS_FILE).write_bytes(bytes(payload))
    (bundle_dir / CHECKSUM_FILE).write_text(checksum + "\n", encoding="utf-8")
    architecture_doc = {
        "architecture": model.architecture.to_dict(),
        "weights": _weight_entries(model.network),
        "metadata": metadata,
    }
    (bundle_dir / ARCHITECTURE_FILE).write_text(
        json.dumps(architecture_doc, indent=2), encoding="utf-8"
    )
    (bundle_dir / LABELS_FILE).write_text(
        json.dumps([label.value for label in CANONICAL_LABELS]), encoding="utf-8"
    )
    (bundle_dir / PREPROCESS_FILE).write_text(
        json.dumps(preprocess.to_dict(), indent=2), encoding="utf-8"
    )
    (bundle_dir / VERSION_FILE).write_text(BUNDLE_FORMAT_VERSION + "\n", encoding="utf-8")

    return ModelBundle(
        path=bundle_dir,
        version=BUNDLE_FORMAT_VERSION,
        model=model,
        preprocess=preprocess,
        labels=CANONICAL_LABELS,
        metadata=metadata,
    )


def _read_required(bundle_dir: Path, name: str) -> Path:
    file_path = bundle_dir / name
    if not file_path.is_file():
        raise BundleError(f"bundle at {bundle_dir} is missing {name}")
    return file_path


def load_bundle(path) -> ModelBundle:
    """Load a bundle directory, verify integrity, and rebuild its network."""
    bundle_dir = Path(path)
    if not bundle_dir.is_dir():
        raise BundleError(f"bundle directory not found: {bundle_dir}")

    version = _read_required(bundle_dir, VERSION_FILE).read_text(encoding="utf-8").strip()
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleVersionError(
            f"bundle format version {version!r} is not supported "
            f"(expected {BUNDLE_FORMAT_VERSION!r})"
        )

    payload = _read_required(bundle_dir, WEIGHTS_FILE).read_bytes()
    expected_checksum = (
        _read_required(bundle_dir, CHECKSUM_FILE).read_text(encoding="utf-8").strip()
    )
    actual_checksum = hashlib.sha256(payload).hexdigest()
    if actual_checksum != expected_checksum:
        raise BundleIntegrityError(
            f"weights checksum mismatch: expected {expected_checksum}, "
            f"got {actual_checksum}"
        )

    architecture_doc = json.loads(
        _read_required(bundle_dir, ARCHITECTURE_FILE).read_text(encoding="utf-8")
    )
    label_names = json.loads(
        _read_required(bundle_dir, LABELS_FILE).read_text(encoding="utf-8")
    )
    if label_names != [label.value for label in CANONICAL_LABELS]:
        raise BundleError(
            f"bundle label order {label_names} does not match the canonical "
            f"order {[l.value for l in CANONICAL_LABELS]}"
        )
    preprocess = PreprocessConfig.from_dict(
        json.loads(_read_required(bundle_dir, PREPROCESS_FILE).read_text(encoding="utf-8"))
    )

    config = ArchitectureConfig.from_dict(architecture_doc["architecture"])
    model = rebuild_for_inference(config)
    metadata = architecture_doc.get("metadata", {})
    model.head_activation = metadata.get("head_activation", HEAD_ACTIVATION)

    entries = architecture_doc["weights"]
    variables = model.network.weights
    if len(entries) != len(variables):
        raise BundleIntegrityError(
            f"weight manifest lists {len(entries)} tensors but the rebuilt "
            f"network has {len(variables)}"
        )

    offset = 0
    values = []
    for entry, variable in zip(entries, variables):
        if entry["name"] != variable.path:
            raise BundleIntegrityError(
                f"weight name mismatch: bundle has {entry['name']!r}, "
                f"network expects {variable.path!r}"
            )
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise BundleIntegrityError("weight payload shorter than its manifest")
        values.append(np.frombuffer(chunk, dtype=dtype).reshape(shape))
        offset += nbytes
    if offset != len(payload):
        raise BundleIntegrityError(
            f"weight payload has {len(payload) - offset} trailing bytes"
        )
    model.network.set_weights(values)

    return ModelBundle(
        path=bundle_dir,
        version=version,
        model=model,
        preprocess=preprocess,
        labels=CANONICAL_LABELS,
        metadata=metadata,
    )
