from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roomtagger.labels import CANONICAL_LABELS, ClassLabel
from roomtagger.manifest import (
    DatasetManifest,
    ImageRecord,
    ManifestError,
    SplitError,
    SplitSpec,
    UndersampleError,
    load_manifest,
    save_manifest,
    split,
    undersample,
)


def write_csv(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def synthetic_manifest(counts: dict[ClassLabel, int]) -> DatasetManifest:
    """In-memory manifest with fake paths; sampling ops never touch disk."""
    records = []
    for label, count in counts.items():
        for i in range(count):
            records.append(
                ImageRecord(
                    path=Path(f"/fake/{label.value}_{i}.jpg"),
                    raw_tag=label.value,
                    label=label,
                )
            )
    return DatasetManifest.from_records(records)


class TestLoadManifest:
    def test_loads_well_formed_rows(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv",
            ["path,raw_tag", "a.jpg,bedroom", "b.jpg,kitchen", "c.jpg,balcony"],
        )
        manifest = load_manifest(csv_path)
        assert len(manifest) == 3
        assert manifest.counts[ClassLabel.BEDROOM] == 1
        assert sum(manifest.counts.values()) == len(manifest)

    def test_raw_tags_are_mapped(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv", ["path,raw_tag", "img1.jpg,living_room"]
        )
        record = load_manifest(csv_path).records[0]
        assert record.label is ClassLabel.HALL
        assert record.raw_tag == "living_room"

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        sub = tmp_path / "data"
        sub.mkdir()
        csv_path = write_csv(sub / "m.csv", ["path,raw_tag", "imgs/a.jpg,bedroom"])
        record = load_manifest(csv_path).records[0]
        assert record.path == (sub / "imgs/a.jpg").resolve()

    def test_absolute_paths_kept(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv", ["path,raw_tag", "/data/x.jpg,bedroom"]
        )
        assert load_manifest(csv_path).records[0].path == Path("/data/x.jpg")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_manifest(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        csv_path = write_csv(tmp_path / "m.csv", ["file,tag", "a.jpg,bedroom"])
        with pytest.raises(ManifestError, match="line 1"):
            load_manifest(csv_path)

    def test_malformed_row_reports_line_number(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv", ["path,raw_tag", "a.jpg,bedroom", "only_one_field"]
        )
        with pytest.raises(ManifestError, match="line 3"):
            load_manifest(csv_path)

    def test_duplicate_path_rejected(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv", ["path,raw_tag", "a.jpg,bedroom", "a.jpg,kitchen"]
        )
        with pytest.raises(ManifestError, match="duplicate path"):
            load_manifest(csv_path)

    def test_round_trip_through_save(self, tmp_path):
        csv_path = write_csv(
            tmp_path / "m.csv", ["path,raw_tag", "a.jpg,living", "b.jpg,garden"]
        )
        manifest = load_manifest(csv_path)
        saved = save_manifest(manifest, tmp_path / "copy.csv")
        assert load_manifest(saved).records == manifest.records


class TestUndersample:
    def test_balances_to_min_count(self):
        counts = {
            ClassLabel.BALCONY: 5,
            ClassLabel.BATHROOM: 3,
            ClassLabel.BEDROOM: 3,
            ClassLabel.HALL: 3,
            ClassLabel.KITCHEN: 3,
            ClassLabel.OTHERS: 3,
        }
        balanced = undersample(synthetic_manifest(counts), seed=0)
        assert all(c == 3 for c in balanced.counts.values())

    def test_deterministic_given_seed(self):
        manifest = synthetic_manifest({l: 10 + i for i, l in enumerate(CANONICAL_LABELS)})
        a = undersample(manifest, seed=99)
        b = undersample(manifest, seed=99)
        assert a.records == b.records

    def test_output_is_subset_of_input(self):
        manifest = synthetic_manifest({l: 7 for l in CANONICAL_LABELS})
        balanced = undersample(manifest, seed=3)
        assert set(balanced.records) <= set(manifest.records)

    def test_zero_count_class_rejected(self):
        counts = {l: 4 for l in CANONICAL_LABELS}
        counts[ClassLabel.OTHERS] = 0
        with pytest.raises(UndersampleError, match="others"):
            undersample(synthetic_manifest(counts), seed=0)

    @given(
        counts=st.tuples(*[st.integers(min_value=1, max_value=25)] * 6),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_property_all_counts_equal_min(self, counts, seed):
        manifest = synthetic_manifest(dict(zip(CANONICAL_LABELS, counts)))
        balanced = undersample(manifest, seed=seed)
        values = list(balanced.counts.values())
        assert max(values) - min(values) == 0
        assert values[0] == min(counts)
        assert len(balanced) == 6 * min(counts)


class TestSplit:
    def test_nine_to_one_on_balanced_sixty(self):
        manifest = synthetic_manifest({l: 10 for l in CANONICAL_LABELS})
        train, val = split(manifest, SplitSpec(seed=1))
        assert len(train) == 54 and len(val) == 6
        assert all(c == 9 for c in train.counts.values())
        assert all(c == 1 for c in val.counts.values())

    def test_partition_disjoint_and_complete(self):
        manifest = synthetic_manifest({l: 11 for l in CANONICAL_LABELS})
        train, val = split(manifest, SplitSpec(seed=4))
        train_set, val_set = set(train.records), set(val.records)
        assert not (train_set & val_set)
        assert train_set | val_set == set(manifest.records)

    def test_deterministic_given_seed(self):
        manifest = synthetic_manifest({l: 9 for l in CANONICAL_LABELS})
        first = split(manifest, SplitSpec(seed=21))
        second = split(manifest, SplitSpec(seed=21))
        assert first[0].records == second[0].records
        assert first[1].records == second[1].records

    def test_single_record_class_rejected(self):
        counts = {l: 5 for l in CANONICAL_LABELS}
        counts[ClassLabel.HALL] = 1
        with pytest.raises(SplitError, match="hall"):
            split(synthetic_manifest(counts), SplitSpec(seed=0))

    def test_empty_manifest_rejected(self):
        with pytest.raises(SplitError, match="empty"):
            split(DatasetManifest.from_records([]), SplitSpec(seed=0))

    def test_fraction_leaving_empty_side_rejected(self):
        manifest = synthetic_manifest({l: 2 for l in CANONICAL_LABELS})
        with pytest.raises(SplitError):
            split(manifest, SplitSpec(train_fraction=Fraction(1, 100), seed=0))

    def test_absent_class_is_allowed(self):
        counts = {l: 8 for l in CANONICAL_LABELS}
        counts[ClassLabel.OTHERS] = 0
        train, val = split(synthetic_manifest(counts), SplitSpec(seed=2))
        assert train.counts[ClassLabel.OTHERS] == 0
        assert val.counts[ClassLabel.OTHERS] == 0

    @given(
        counts=st.tuples(*[st.integers(min_value=2, max_value=40)] * 6),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_property_stratified_floor_and_conservation(self, counts, seed):
        manifest = synthetic_manifest(dict(zip(CANONICAL_LABELS, counts)))
        spec = SplitSpec(seed=seed)
        train, val = split(manifest, spec)
        for label, count in zip(CANONICAL_LABELS, counts):
            expected_train = (spec.train_fraction * count).__floor__()
            assert train.counts[label] == expected_train
            assert train.counts[label] + val.counts[label] == count


class TestSplitSpec:
    def test_default_fraction_is_nine_tenths(self):
        assert SplitSpec().train_fraction == Fraction(9, 10)

    def test_float_fraction_converted_exactly(self):
        assert SplitSpec(train_fraction=0.75).train_fraction == Fraction(3, 4)

    @pytest.mark.parametrize("bad", [0, 1, 1.5, -0.1])
    def test_fraction_bounds(self, bad):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=bad)

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(seed=-1)


def test_counts_invariant_matches_records():
    manifest = synthetic_manifest({l: 3 for l in CANONICAL_LABELS})
    assert sum(manifest.counts.values()) == len(manifest.records)


def test_duplicate_records_rejected_at_construction():
    record = ImageRecord(Path("/x.jpg"), "bedroom", ClassLabel.BEDROOM)
    with pytest.raises(ManifestError):
        DatasetManifest.from_records([record, record])
