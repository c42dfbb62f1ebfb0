import dataclasses
import json

import numpy as np
import pytest

from colpoprep.dataset import (
    ClassLabel,
    DatasetManifest,
    ImageRecord,
    ManifestError,
    NoiseTag,
    Split,
    SplitSpec,
    ingest_folders,
    manifest_from_dict,
    manifest_to_dict,
    merge_classes,
    read_manifest,
    stratified_split,
    write_manifest,
)

from conftest import FULL_TREE_COUNTS, build_tree


def _synthetic_manifest(n_normal, n_abnormal, seed=None):
    records = []
    for i in range(n_normal):
        records.append(ImageRecord(f"Normal/n{i:04d}.png", f"Normal/n{i:04d}.png", ClassLabel.NORMAL, NoiseTag.CLEAN))
    for i in range(n_abnormal):
        records.append(
            ImageRecord(f"Abnormal/a{i:04d}.png", f"Abnormal/a{i:04d}.png", ClassLabel.ABNORMAL, NoiseTag.CLEAN)
        )
    return DatasetManifest.from_records(records, seed)


class TestIngest:
    def test_full_tree_counts(self, full_tree):
        result = ingest_folders(full_tree)
        manifest = merge_classes(result.manifest)
        assert manifest.class_counts() == {ClassLabel.NORMAL: 45, ClassLabel.ABNORMAL: 145}
        groups = manifest.group_counts()
        assert groups[(ClassLabel.NORMAL, NoiseTag.CLEAN)] == FULL_TREE_COUNTS["Normal"]
        assert groups[(ClassLabel.NORMAL, NoiseTag.NOISY)] == FULL_TREE_COUNTS["NormalNoise"]
        assert groups[(ClassLabel.ABNORMAL, NoiseTag.CLEAN)] == FULL_TREE_COUNTS["Abnormal"]
        assert groups[(ClassLabel.ABNORMAL, NoiseTag.NOISY)] == FULL_TREE_COUNTS["AbnormalNoise"]
        assert result.skipped == ()

    def test_ids_are_folder_relative_and_sorted(self, small_tree):
        manifest = ingest_folders(small_tree).manifest
        ids = [r.id for r in manifest.records]
        assert ids == sorted(ids)
        assert all("/" in i for i in ids)
        for r in manifest.records:
            folder = r.id.split("/")[0]
            assert folder in ("Normal", "NormalNoise", "Abnormal", "AbnormalNoise")

    def test_empty_folders_give_empty_manifest(self, tmp_path):
        for name in ("Normal", "NormalNoise", "Abnormal", "AbnormalNoise"):
            (tmp_path / name).mkdir()
        result = ingest_folders(tmp_path)
        assert result.manifest.records == ()
        assert result.skipped == ()

    def test_missing_subfolder_treated_as_empty(self, tmp_path):
        build_tree(tmp_path, {"Normal": 2})
        manifest = ingest_folders(tmp_path).manifest
        assert len(manifest.records) == 2

    def test_non_image_file_skipped(self, tmp_path):
        build_tree(tmp_path, {"Normal": 2})
        (tmp_path / "Normal" / "notes.txt").write_text("not an image")
        result = ingest_folders(tmp_path)
        assert len(result.manifest.records) == 2
        assert len(result.skipped) == 1
        assert result.skipped[0].path.endswith("notes.txt")
        assert result.skipped[0].reason

    def test_missing_root_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest_folders(tmp_path / "nowhere")


class TestMergeClasses:
    def test_counts_collapse(self, full_tree):
        manifest = ingest_folders(full_tree).manifest
        merged = merge_classes(manifest)
        assert merged.class_counts() == {ClassLabel.NORMAL: 45, ClassLabel.ABNORMAL: 145}
        assert len(merged.records) == len(manifest.records)

    def test_idempotent(self, small_tree):
        manifest = ingest_folders(small_tree).manifest
        once = merge_classes(manifest)
        assert merge_classes(once) == once

    def test_single_noisy_record(self):
        rec = ImageRecord("NormalNoise/x.png", "NormalNoise/x.png", ClassLabel.NORMAL, NoiseTag.NOISY)
        merged = merge_classes(DatasetManifest.from_records([rec]))
        assert merged.records[0].label is ClassLabel.NORMAL
        assert merged.records[0].noise is NoiseTag.NOISY


class TestStratifiedSplit:
    def test_reference_counts_validation_sizes(self):
        manifest = _synthetic_manifest(45, 145)
        split = stratified_split(manifest, SplitSpec(train_fraction=0.8, seed=11))
        counts = split.split_counts()
        assert counts[(ClassLabel.NORMAL, Split.VALIDATION)] == 9
        assert counts[(ClassLabel.ABNORMAL, Split.VALIDATION)] == 29
        assert counts[(ClassLabel.NORMAL, Split.TRAIN)] == 36
        assert counts[(ClassLabel.ABNORMAL, Split.TRAIN)] == 116

    def test_symmetric_half_split(self):
        manifest = _synthetic_manifest(10, 10)
        split = stratified_split(manifest, SplitSpec(train_fraction=0.5, seed=3))
        counts = split.split_counts()
        assert counts[(ClassLabel.NORMAL, Split.VALIDATION)] == 5
        assert counts[(ClassLabel.ABNORMAL, Split.VALIDATION)] == 5

    def test_determinism_and_seed_divergence(self):
        manifest = _synthetic_manifest(20, 30)
        spec = SplitSpec(train_fraction=0.8, seed=7)
        a = stratified_split(manifest, spec)
        b = stratified_split(manifest, spec)
        assert a == b
        assignments = set()
        for seed in range(20):
            split = stratified_split(manifest, SplitSpec(train_fraction=0.8, seed=seed))
            assignments.add(tuple(r.split for r in split.records))
        assert len(assignments) > 15  # different seeds almost always differ

    def test_partition_property(self):
        manifest = _synthetic_manifest(13, 27)
        split = stratified_split(manifest, SplitSpec(train_fraction=0.8, seed=1))
        assert all(r.split is not None for r in split.records)
        assert {r.id for r in split.records} == {r.id for r in manifest.records}

    def test_proportion_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n_n = int(rng.integers(2, 80))
            n_a = int(rng.integers(2, 80))
            frac = float(rng.uniform(0.5, 0.95))
            manifest = _synthetic_manifest(n_n, n_a)
            split = stratified_split(manifest, SplitSpec(train_fraction=frac, seed=9))
            counts = split.split_counts()
            for label, n in ((ClassLabel.NORMAL, n_n), (ClassLabel.ABNORMAL, n_a)):
                val = counts.get((label, Split.VALIDATION), 0)
                assert abs(val / n - (1.0 - frac)) <= 0.5 / n + 1e-12

    def test_already_split_rejected(self):
        manifest = _synthetic_manifest(4, 4)
        split = stratified_split(manifest, SplitSpec(seed=0))
        with pytest.raises(ValueError):
            stratified_split(split, SplitSpec(seed=0))

    def test_empty_class_rejected(self):
        records = [ImageRecord("Normal/a.png", "p", ClassLabel.NORMAL, NoiseTag.CLEAN)]
        with pytest.raises(ValueError):
            stratified_split(DatasetManifest.from_records(records), SplitSpec(seed=0))

    def test_split_seed_recorded(self):
        manifest = _synthetic_manifest(5, 5)
        split = stratified_split(manifest, SplitSpec(train_fraction=0.8, seed=99))
        assert split.seed == 99


class TestManifestInvariants:
    def test_duplicate_ids_rejected(self):
        rec = ImageRecord("x/a.png", "p", ClassLabel.NORMAL, NoiseTag.CLEAN)
        with pytest.raises(ValueError):
            DatasetManifest((rec, rec))

    def test_non_canonical_order_rejected(self):
        a = ImageRecord("a.png", "p", ClassLabel.NORMAL, NoiseTag.CLEAN)
        b = ImageRecord("b.png", "p", ClassLabel.NORMAL, NoiseTag.CLEAN)
        with pytest.raises(ValueError):
            DatasetManifest((b, a))
        assert DatasetManifest.from_records([b, a]).records == (a, b)

    def test_counts_sum_to_total(self, small_tree):
        manifest = ingest_folders(small_tree).manifest
        assert sum(manifest.class_counts().values()) == len(manifest.records)
        assert sum(manifest.group_counts().values()) == len(manifest.records)

    def test_bad_spec_values(self):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=0.0)
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.0)
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=0.8, seed=-1)
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=0.8, seed=1 << 64)


class TestManifestFile:
    def test_roundtrip(self, tmp_path, small_tree):
        manifest = stratified_split(
            merge_classes(ingest_folders(small_tree).manifest), SplitSpec(seed=5)
        )
        path = tmp_path / "manifest.json"
        write_manifest(manifest, path)
        assert read_manifest(path) == manifest

    def test_roundtrip_without_split(self, tmp_path, small_tree):
        manifest = ingest_folders(small_tree).manifest
        path = tmp_path / "m.json"
        write_manifest(manifest, path)
        again = read_manifest(path)
        assert again == manifest
        assert again.seed is None

    def _valid_dict(self):
        manifest = _synthetic_manifest(2, 2, seed=4)
        return manifest_to_dict(manifest)

    def test_missing_label_field_rejected(self):
        data = self._valid_dict()
        del data["records"][0]["label"]
        with pytest.raises(ManifestError, match="label"):
            manifest_from_dict(data)

    def test_unknown_field_rejected(self):
        data = self._valid_dict()
        data["extra"] = 1
        with pytest.raises(ManifestError, match="extra"):
            manifest_from_dict(data)
        data = self._valid_dict()
        data["records"][1]["bogus"] = True
        with pytest.raises(ManifestError, match=r"records\[1\].bogus"):
            manifest_from_dict(data)

    def test_bad_enum_rejected(self):
        data = self._valid_dict()
        data["records"][0]["label"] = "Benign"
        with pytest.raises(ManifestError, match="Benign"):
            manifest_from_dict(data)

    def test_count_mismatch_rejected(self):
        data = self._valid_dict()
        data["counts"]["Normal/Clean"] += 1
        with pytest.raises(ManifestError, match="count"):
            manifest_from_dict(data)

    def test_duplicate_and_disorder_rejected(self):
        data = self._valid_dict()
        data["records"][1] = dict(data["records"][0])
        with pytest.raises(ManifestError, match="duplicate"):
            manifest_from_dict(data)
        data = self._valid_dict()
        data["records"].reverse()
        with pytest.raises(ManifestError, match="order"):
            manifest_from_dict(data)

    def test_bad_seed_rejected(self):
        data = self._valid_dict()
        data["seed"] = -3
        with pytest.raises(ManifestError, match="seed"):
            manifest_from_dict(data)
        data["seed"] = "abc"
        with pytest.raises(ManifestError, match="seed"):
            manifest_from_dict(data)

    def test_bad_version_rejected(self):
        data = self._valid_dict()
        data["version"] = 99
        with pytest.raises(ManifestError, match="version"):
            manifest_from_dict(data)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "version": 1,\n  oops\n}\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="line 3"):
            read_manifest(path)

    def test_record_fields_survive_roundtrip(self):
        data = self._valid_dict()
        manifest = manifest_from_dict(data)
        assert manifest_to_dict(manifest) == data

    def test_records_are_frozen(self):
        rec = ImageRecord("a", "p", ClassLabel.NORMAL, NoiseTag.CLEAN)
        with pytest.raises(dataclasses.FrozenInstanceError):
            rec.id = "b"

    def test_written_file_is_valid_json(self, tmp_path):
        manifest = _synthetic_manifest(1, 1)
        path = tmp_path / "m.json"
        write_manifest(manifest, path)
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["version"] == 1
        assert data["counts"]["Normal/Clean"] == 1
