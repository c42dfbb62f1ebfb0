"""Regenerates the committed golden fixtures in this directory.

Run from the repository root:

    python3 tests/data/make_fixtures.py

The augmented golden is produced by the library itself; it was generated once
and committed, and the test suite verifies that today's pipeline still
reproduces it byte-for-byte. Regenerate only when the augmentation contract
changes on purpose, and say so in the changelog.
"""

import hashlib
import json
import tempfile
from pathlib import Path

import numpy as np

from colpoprep.augment import apply_pipeline, default_spec, derive_stream
from colpoprep.cli import main as cli_main
from colpoprep.dataset import ClassLabel, read_manifest
from colpoprep.image_io import load_image, save_png
from colpoprep.metrics import PredictionRecord, write_predictions_csv

HERE = Path(__file__).parent

GRADIENT_ID = "fixture/gradient"

FIXTURE_TREE_COUNTS = {"Normal": 3, "NormalNoise": 2, "Abnormal": 4, "AbnormalNoise": 3}


def gradient_8x8() -> np.ndarray:
    img = np.zeros((8, 8, 3), np.uint8)
    for y in range(8):
        for x in range(8):
            img[y, x] = (y * 36, x * 36, (x + y) * 18)
    return img


def reference_predictions() -> list[PredictionRecord]:
    """39 validation predictions whose 0.5-threshold tally is tp=18, fp=1,
    fn=12, tn=8 (the published confusion-matrix counts)."""
    preds = []
    for i in range(18):  # true abnormal, caught
        preds.append(PredictionRecord(f"Abnormal/v{i:02d}.png", ClassLabel.ABNORMAL, 0.52 + 0.02 * i))
    for i in range(12):  # true abnormal, missed
        preds.append(PredictionRecord(f"Abnormal/v{18 + i:02d}.png", ClassLabel.ABNORMAL, 0.04 + 0.035 * i))
    preds.append(PredictionRecord("Normal/v00.png", ClassLabel.NORMAL, 0.61))  # false alarm
    for i in range(8):  # true normal, cleared
        preds.append(PredictionRecord(f"Normal/v{1 + i:02d}.png", ClassLabel.NORMAL, 0.03 + 0.05 * i))
    return preds


def build_fixture_tree() -> Path:
    """12 deterministic 12x12 RGB images in the four-folder layout."""
    tree = HERE / "fixture_tree"
    rng = np.random.default_rng(777)
    for folder, count in FIXTURE_TREE_COUNTS.items():
        for i in range(count):
            img = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
            save_png(np.asarray(img), tree / folder / f"img_{i:02d}.png")
    return tree


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _png_pixel_hash(path: Path) -> str:
    img = load_image(path)
    meta = f"{img.shape}:{img.dtype}".encode()
    return _sha(meta + img.tobytes())


def _manifest_summary_hash(path: Path) -> str:
    """Hash of the manifest's location-independent content (no paths)."""
    manifest = read_manifest(path)
    rows = [
        (r.id, r.label.value, r.noise.value, r.split.value if r.split else None)
        for r in manifest.records
    ]
    return _sha(json.dumps({"seed": manifest.seed, "rows": rows}, sort_keys=True).encode())


def run_reference_pipeline(work: Path) -> dict:
    """Drive the CLI end to end on the committed tree; return content hashes."""
    tree = HERE / "fixture_tree"
    config = HERE / "pipeline_config.json"
    steps = [
        ["ingest", "--root", str(tree), "--out", str(work / "manifest.json")],
        ["split", "--manifest", str(work / "manifest.json"), "--config", str(config)],
        ["preprocess", "--manifest", str(work / "manifest.json"), "--config", str(config),
         "--out", str(work / "pre")],
        ["augment", "--manifest", str(work / "pre" / "manifest.json"), "--config", str(config),
         "--out", str(work / "aug")],
        ["evaluate", "--predictions", str(HERE / "reference_predictions.csv"),
         "--out", str(work / "report.json")],
    ]
    for argv in steps:
        code = cli_main(argv)
        if code != 0:
            raise RuntimeError(f"reference pipeline step failed: {argv}")
    hashes: dict = {
        "split_manifest": _manifest_summary_hash(work / "manifest.json"),
        "preprocessed_manifest": _sha((work / "pre" / "manifest.json").read_bytes()),
        "augmented_manifest": _sha((work / "aug" / "manifest.json").read_bytes()),
        "report": _sha((work / "report.json").read_bytes()),
        "images": {},
    }
    for sub in ("pre", "aug"):
        for png in sorted((work / sub).glob("*.png")):
            hashes["images"][f"{sub}/{png.name}"] = _png_pixel_hash(png)
    return hashes


def build_golden_hashes() -> None:
    with tempfile.TemporaryDirectory() as td:
        hashes = run_reference_pipeline(Path(td))
    out = HERE / "golden_pipeline_hashes.json"
    out.write_text(json.dumps(hashes, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print("wrote", out, f"({len(hashes['images'])} image hashes)")


def main() -> None:
    img = gradient_8x8()
    save_png(img, HERE / "gradient_8x8.png")
    spec = default_spec(seed=0, copies_per_image=1)
    out = apply_pipeline(img, spec, derive_stream(spec, GRADIENT_ID, 0))
    save_png(out, HERE / "gradient_8x8_aug0.png")
    write_predictions_csv(reference_predictions(), HERE / "reference_predictions.csv")
    build_fixture_tree()
    build_golden_hashes()
    print("wrote", HERE / "gradient_8x8.png")
    print("wrote", HERE / "gradient_8x8_aug0.png")
    print("wrote", HERE / "reference_predictions.csv")
    print("wrote", HERE / "fixture_tree")


if __name__ == "__main__":
    main()
