"""The six-class room taxonomy and the raw-tag mapping rules."""

from __future__ import annotations

from enum import Enum
from typing import Mapping


class ClassLabel(str, Enum):
    """One of the six room categories, in canonical (alphabetical) order."""

    BALCONY = "balcony"
    BATHROOM = "bathroom"
    BEDROOM = "bedroom"
    HALL = "hall"
    KITCHEN = "kitchen"
    OTHERS = "others"

    def __str__(self) -> str:
        return self.value


# Canonical ordering used everywhere: manifest counts, model outputs,
# confusion matrices, serialized score objects.
CANONICAL_LABELS: tuple[ClassLabel, ...] = tuple(ClassLabel)
LABEL_TO_INDEX: dict[ClassLabel, int] = {
    label: index for index, label in enumerate(CANONICAL_LABELS)
}

# Shipped merge table: living and dining rooms collapse into `hall`. Any
# raw tag not covered here and not a canonical label name falls through to
# `others`. Callers may supply their own table to extend the vocabulary.
DEFAULT_TAG_MERGES: dict[str, ClassLabel] = {
    "living": ClassLabel.HALL,
    "living_room": ClassLabel.HALL,
    "dining": ClassLabel.HALL,
    "dining_room": ClassLabel.HALL,
}


def coerce_label(value) -> ClassLabel:
    """Return `value` as a ClassLabel; accepts enum members or their names."""
    if isinstance(value, ClassLabel):
        return value
    try:
        return ClassLabel(str(value).strip().lower())
    except ValueError:
        raise ValueError(
            f"unknown class label {value!r}; expected one of "
            f"{[label.value for label in CANONICAL_LABELS]}"
        ) from None


def map_raw_tag(raw: str, merges: Mapping[str, ClassLabel] | None = None) -> ClassLabel:
    """Map a source annotation string onto the six-class taxonomy.

    Matching is case-insensitive after trimming. Tags in the merge table map
    to their merged class, canonical label names map to themselves, and every
    other string maps to ``others``. Total: never raises.
    """
    key = raw.strip().lower()
    table = DEFAULT_TAG_MERGES if merges is None else merges
    if key in table:
        return table[key]
    try:
        return ClassLabel(key)
    except ValueError:
        return ClassLabel.OTHERS
