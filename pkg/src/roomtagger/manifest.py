"""Labeled image manifests: CSV loading, class balancing, stratified splits.

A manifest is an immutable list of (path, raw tag, label) records. The CSV
wire format is UTF-8 with header ``path,raw_tag``, one record per line;
relative paths are resolved against the manifest file's directory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .labels import CANONICAL_LABELS, ClassLabel, map_raw_tag
from .seeding import check_seed, make_rng

MANIFEST_HEADER = ("path", "raw_tag")


class ManifestError(ValueError):
    """Malformed manifest file or record set."""


class UndersampleError(ValueError):
    """Class balancing is impossible for the given manifest."""


class SplitError(ValueError):
    """The requested train/validation partition cannot be formed."""


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image: source path, original annotation, mapped class."""

    path: Path
    raw_tag: str
    label: ClassLabel


@dataclass(frozen=True)
class DatasetManifest:
    """Immutable ordered collection of image records with per-class counts."""

    records: tuple[ImageRecord, ...]

    def __post_init__(self):
        seen: set[Path] = set()
        for record in self.records:
            if record.path in seen:
                raise ManifestError(f"duplicate path in manifest: {record.path}")
            seen.add(record.path)

    @classmethod
    def from_records(cls, records: Iterable[ImageRecord]) -> "DatasetManifest":
        return cls(records=tuple(records))

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def counts(self) -> dict[ClassLabel, int]:
        """Number of records per class, for all six classes (zeros included)."""
        counts = {label: 0 for label in CANONICAL_LABELS}
        for record in self.records:
            counts[record.label] += 1
        return counts

    def subset(self, indices: Sequence[int]) -> "DatasetManifest":
        """New manifest keeping `indices`, in original record order."""
        return DatasetManifest(
            records=tuple(self.records[i] for i in sorted(indices))
        )

    def indices_by_label(self) -> dict[ClassLabel, list[int]]:
        by_label: dict[ClassLabel, list[int]] = {l: [] for l in CANONICAL_LABELS}
        for index, record in enumerate(self.records):
            by_label[record.label].append(index)
        return by_label


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation split parameters.

    `train_fraction` is kept as an exact rational so per-class train counts
    are exactly ``floor(train_fraction * class_count)``.
    """

    train_fraction: Fraction = Fraction(9, 10)
    seed: int = 0

    def __post_init__(self):
        fraction = self.train_fraction
        if not isinstance(fraction, Fraction):
            fraction = Fraction(str(fraction))
            object.__setattr__(self, "train_fraction", fraction)
        if not (0 < fraction < 1):
            raise ValueError(f"train_fraction must be in (0, 1), got {fraction}")
        object.__setattr__(self, "seed", check_seed(self.seed))


def load_manifest(
    path, merges: Mapping[str, ClassLabel] | None = None
) -> DatasetManifest:
    """Load a ``path,raw_tag`` CSV and map every raw tag onto the taxonomy.

    Raises FileNotFoundError for a missing file and ManifestError (with the
    offending line number) for a bad header, malformed row, or duplicate path.
    """
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest file not found: {manifest_path}")
    base_dir = manifest_path.parent

    records: list[ImageRecord] = []
    seen: dict[Path, int] = {}
    with manifest_path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{manifest_path}: empty manifest file") from None
        if tuple(field.strip() for field in header) != MANIFEST_HEADER:
            raise ManifestError(
                f"{manifest_path}: line 1: expected header "
                f"'{','.join(MANIFEST_HEADER)}', got '{','.join(header)}'"
            )
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip():
                raise ManifestError(
                    f"{manifest_path}: line {line_number}: expected "
                    f"'path,raw_tag', got '{','.join(row)}'"
                )
            raw_path, raw_tag = row[0].strip(), row[1].strip()
            record_path = Path(raw_path)
            if not record_path.is_absolute():
                record_path = (base_dir / record_path).resolve()
            if record_path in seen:
                raise ManifestError(
                    f"{manifest_path}: line {line_number}: duplicate path "
                    f"'{raw_path}' (first seen on line {seen[record_path]})"
                )
            seen[record_path] = line_number
            records.append(
                ImageRecord(
                    path=record_path,
                    raw_tag=raw_tag,
                    label=map_raw_tag(raw_tag, merges),
                )
            )
    return DatasetManifest.from_records(records)


def undersample(manifest: DatasetManifest, seed: int) -> DatasetManifest:
    """Balance all six classes down to the smallest class count.

    Selection within each class is uniform without replacement and
    deterministic given `seed`. Output record order follows the input.
    """
    counts = manifest.counts
    empty = [label.value for label in CANONICAL_LABELS if counts[label] == 0]
    if empty:
        raise UndersampleError(
            f"cannot balance: classes with zero records: {', '.join(empty)}"
        )
    target = min(counts.values())
    rng = make_rng(seed)

    kept: list[int] = []
    by_label = manifest.indices_by_label()
    for label in CANONICAL_LABELS:
        indices = by_label[label]
        chosen = rng.choice(len(indices), size=target, replace=False)
        kept.extend(indices[i] for i in chosen)
    return manifest.subset(kept)


def split(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified partition into (train, validation) manifests.

    Every class present keeps exactly ``floor(train_fraction * count)``
    records in train and the remainder in validation; both sides must end
    up non-empty for each represented class. Deterministic given the seed.
    """
    if len(manifest) == 0:
        raise SplitError("cannot split an empty manifest")

    rng = make_rng(spec.seed)
    by_label = manifest.indices_by_label()
    train_indices: list[int] = []
    val_indices: list[int] = []
    for label in CANONICAL_LABELS:
        indices = by_label[label]
        count = len(indices)
        if count == 0:
            continue
        if count < 2:
            raise SplitError(
                f"class '{label.value}' has {count} record(s); at least 2 are "
                "needed so both splits are non-empty"
            )
        n_train = math.floor(spec.train_fraction * count)
        if n_train == 0 or n_train == count:
            raise SplitError(
                f"train_fraction {spec.train_fraction} leaves an empty split "
                f"for class '{label.value}' ({count} records)"
            )
        order = rng.permutation(count)
        train_indices.extend(indices[i] for i in order[:n_train])
        val_indices.extend(indices[i] for i in order[n_train:])
    return manifest.subset(train_indices), manifest.subset(val_indices)


def save_manifest(manifest: DatasetManifest, path) -> Path:
    """Write a manifest back to the CSV wire format (absolute paths)."""
    out_path = Path(path)
    with out_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_HEADER)
        for record in manifest.records:
            writer.writerow([str(record.path), record.raw_tag])
    return out_path
