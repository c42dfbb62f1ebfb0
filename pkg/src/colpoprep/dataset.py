"""Dataset inventory: folder ingestion, class merging, stratified splitting.

A manifest is an ordered inventory of labeled, noise-flagged image records.
Canonical form is lexicographic order by record id, which makes every seeded
shuffle (and therefore every split) reproducible across platforms and scan
orders.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from colpoprep.rng import derive_stream

MANIFEST_VERSION = 1
_MAX_SEED = (1 << 64) - 1

FOLDER_NAMES = ("Normal", "NormalNoise", "Abnormal", "AbnormalNoise")


class ClassLabel(enum.Enum):
    NORMAL = "Normal"
    ABNORMAL = "Abnormal"


class NoiseTag(enum.Enum):
    CLEAN = "Clean"
    NOISY = "Noisy"


class Split(enum.Enum):
    TRAIN = "Train"
    VALIDATION = "Validation"


# four-folder provenance -> (class, noise tag)
FOLDER_TAGS: dict[str, tuple[ClassLabel, NoiseTag]] = {
    "Normal": (ClassLabel.NORMAL, NoiseTag.CLEAN),
    "NormalNoise": (ClassLabel.NORMAL, NoiseTag.NOISY),
    "Abnormal": (ClassLabel.ABNORMAL, NoiseTag.CLEAN),
    "AbnormalNoise": (ClassLabel.ABNORMAL, NoiseTag.NOISY),
}


class ManifestError(ValueError):
    """Manifest file failed to parse or validate.

    ``field`` names the offending JSON path when known; ``line`` carries the
    source line for malformed JSON.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    label: ClassLabel
    noise: NoiseTag
    split: Split | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("record id must be non-empty")
        if not self.path:
            raise ValueError("record path must be non-empty")


@dataclass(frozen=True)
class DatasetManifest:
    """Canonically ordered record inventory with an optional split seed."""

    records: tuple[ImageRecord, ...]
    seed: int | None = None

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValueError(f"duplicate record id {dup!r}")
        if ids != sorted(ids):
            raise ValueError("records must be in canonical (lexicographic id) order")

    @classmethod
    def from_records(cls, records, seed: int | None = None) -> "DatasetManifest":
        return cls(tuple(sorted(records, key=lambda r: r.id)), seed)

    def group_counts(self) -> dict[tuple[ClassLabel, NoiseTag], int]:
        counts = {(lab, noi): 0 for lab in ClassLabel for noi in NoiseTag}
        for r in self.records:
            counts[(r.label, r.noise)] += 1
        return counts

    def class_counts(self) -> dict[ClassLabel, int]:
        counts = {lab: 0 for lab in ClassLabel}
        for r in self.records:
            counts[r.label] += 1
        return counts

    def split_counts(self) -> dict[tuple[ClassLabel, Split | None], int]:
        counts: dict[tuple[ClassLabel, Split | None], int] = {}
        for r in self.records:
            key = (r.label, r.split)
            counts[key] = counts.get(key, 0) + 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not 0 <= self.seed <= _MAX_SEED:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class SkippedFile:
    path: str
    reason: str


@dataclass(frozen=True)
class IngestResult:
    manifest: DatasetManifest
    skipped: tuple[SkippedFile, ...]


def _probe_image(path: Path) -> str | None:
    """Return None if the file decodes as PNG or JPEG, else a skip reason."""
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                return f"unsupported format {im.format!r}"
            im.load()
        return None
    except UnidentifiedImageError:
        return "not a decodable image"
    except OSError as exc:
        return f"decode failed: {exc}"


def ingest_folders(root: str | Path) -> IngestResult:
    """Scan the four-folder dataset layout under ``root``.

    Every file that decodes as PNG or JPEG becomes a record labeled by its
    folder; anything else lands on the skip list. Missing folders are treated
    as empty. Record ids are folder-relative POSIX paths.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    records: list[ImageRecord] = []
    skipped: list[SkippedFile] = []
    for folder in FOLDER_NAMES:
        label, noise = FOLDER_TAGS[folder]
        folder_path = root / folder
        if not folder_path.is_dir():
            continue
        for entry in sorted(folder_path.iterdir()):
            if not entry.is_file():
                continue
            reason = _probe_image(entry)
            if reason is not None:
                skipped.append(SkippedFile(path=str(entry), reason=reason))
                continue
            records.append(
                ImageRecord(
                    id=f"{folder}/{entry.name}",
                    path=(root / folder / entry.name).as_posix(),
                    label=label,
                    noise=noise,
                )
            )
    return IngestResult(DatasetManifest.from_records(records), tuple(skipped))


def merge_classes(manifest: DatasetManifest) -> DatasetManifest:
    """Collapse four-folder provenance to the two-class scheme.

    Records already carry (label, noise) pairs, so merging preserves every
    record and noise flag; the operation is idempotent and exists as the
    explicit point where per-class counts become meaningful.
    """
    return DatasetManifest(manifest.records, manifest.seed)


def _validation_size(n: int, train_fraction: float) -> int:
    # round-half-up of the validation share
    return math.floor(n * (1.0 - train_fraction) + 0.5)


def stratified_split(manifest: DatasetManifest, spec: SplitSpec) -> DatasetManifest:
    """Assign Train/Validation per class with a seeded Fisher-Yates shuffle.

    Per class the validation size is round-half-up of ``n * (1 - fraction)``;
    membership comes from shuffling that class's canonical-ordered ids with
    the stream derived from (seed, "split/<class>", 0). Identical inputs give
    identical assignments.
    """
    if any(r.split is not None for r in manifest.records):
        raise ValueError("manifest already has split assignments")
    validation_ids: set[str] = set()
    for label in ClassLabel:
        ids = [r.id for r in manifest.records if r.label is label]
        if not ids:
            raise ValueError(f"cannot stratify: class {label.value} has 0 records")
        stream = derive_stream(spec.seed, f"split/{label.value}", 0)
        stream.shuffle(ids)
        validation_ids.update(ids[: _validation_size(len(ids), spec.train_fraction)])
    new_records = tuple(
        replace(r, split=Split.VALIDATION if r.id in validation_ids else Split.TRAIN)
        for r in manifest.records
    )
    return DatasetManifest(new_records, seed=spec.seed)


# ---------------------------------------------------------------------------
# manifest file format


def _group_key(label: ClassLabel, noise: NoiseTag) -> str:
    return f"{label.value}/{noise.value}"


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    counts = manifest.group_counts()
    return {
        "version": MANIFEST_VERSION,
        "seed": manifest.seed,
        "counts": {
            _group_key(lab, noi): counts[(lab, noi)] for lab in ClassLabel for noi in NoiseTag
        },
        "records": [
            {
                "id": r.id,
                "path": r.path,
                "label": r.label.value,
                "noise": r.noise.value,
                "split": r.split.value if r.split is not None else None,
            }
            for r in manifest.records
        ],
    }


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write the manifest JSON (UTF-8, canonical record order)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(manifest_to_dict(manifest), indent=2, ensure_ascii=False) + "\n"
    path.write_text(text, encoding="utf-8")


def _require_keys(obj: dict, expected: set[str], where: str) -> None:
    missing = expected - obj.keys()
    if missing:
        raise ManifestError("missing required field", field=f"{where}.{sorted(missing)[0]}")
    unknown = obj.keys() - expected
    if unknown:
        raise ManifestError("unknown field", field=f"{where}.{sorted(unknown)[0]}")


def _parse_enum(value, enum_cls, where: str):
    for member in enum_cls:
        if member.value == value:
            return member
    allowed = [m.value for m in enum_cls]
    raise ManifestError(f"expected one of {allowed}, got {value!r}", field=where)


def manifest_from_dict(data: dict) -> DatasetManifest:
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object", field="$")
    _require_keys(data, {"version", "seed", "counts", "records"}, "$")
    if data["version"] != MANIFEST_VERSION:
        raise ManifestError(f"unsupported version {data['version']!r}", field="$.version")
    seed = data["seed"]
    if seed is not None and not (isinstance(seed, int) and 0 <= seed <= _MAX_SEED):
        raise ManifestError("seed must be null or an unsigned 64-bit integer", field="$.seed")
    if not isinstance(data["records"], list):
        raise ManifestError("records must be a list", field="$.records")

    records = []
    for i, raw in enumerate(data["records"]):
        where = f"$.records[{i}]"
        if not isinstance(raw, dict):
            raise ManifestError("record must be an object", field=where)
        _require_keys(raw, {"id", "path", "label", "noise", "split"}, where)
        if not isinstance(raw["id"], str) or not raw["id"]:
            raise ManifestError("id must be a non-empty string", field=f"{where}.id")
        if not isinstance(raw["path"], str) or not raw["path"]:
            raise ManifestError("path must be a non-empty string", field=f"{where}.path")
        label = _parse_enum(raw["label"], ClassLabel, f"{where}.label")
        noise = _parse_enum(raw["noise"], NoiseTag, f"{where}.noise")
        split = None if raw["split"] is None else _parse_enum(raw["split"], Split, f"{where}.split")
        records.append(ImageRecord(raw["id"], raw["path"], label, noise, split))

    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ManifestError("duplicate record ids", field="$.records")
    if ids != sorted(ids):
        raise ManifestError("records are not in canonical id order", field="$.records")
    manifest = DatasetManifest(tuple(records), seed)

    declared = data["counts"]
    if not isinstance(declared, dict):
        raise ManifestError("counts must be an object", field="$.counts")
    actual = {
        _group_key(lab, noi): n for (lab, noi), n in manifest.group_counts().items()
    }
    _require_keys(declared, set(actual.keys()), "$.counts")
    for key, n in actual.items():
        if declared[key] != n:
            raise ManifestError(
                f"declared count {declared[key]!r} does not match {n} records",
                field=f"$.counts.{key}",
            )
    return manifest


def read_manifest(path: str | Path) -> DatasetManifest:
    """Read and strictly validate a manifest file.

    Unknown fields, count mismatches, duplicate ids and non-canonical order
    are all rejected.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    return manifest_from_dict(data)
