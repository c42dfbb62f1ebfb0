"""
Dataset ingest, class merging, and stratified splits
====================================================

Writes a small four-folder tree of PNGs to a scratch directory, ingests it
into a manifest, folds the *Noise folders into their parent classes, and
assigns a deterministic stratified train/validation split.
"""

import tempfile
from pathlib import Path

import numpy as np

from colpoprep.dataset import SplitSpec, ingest_folders, merge_classes, stratified_split, write_manifest
from colpoprep.image_io import save_png

rng = np.random.default_rng(0)
scratch = Path(tempfile.mkdtemp(prefix="colpoprep_demo_"))

# the expected layout: Normal / NormalNoise / Abnormal / AbnormalNoise
for folder, n in {"Normal": 9, "NormalNoise": 4, "Abnormal": 18, "AbnormalNoise": 8}.items():
    for i in range(n):
        save_png(rng.integers(0, 256, size=(24, 24), dtype=np.uint8), scratch / folder / f"img_{i:02d}.png")
(scratch / "Normal" / "notes.txt").write_text("not an image\n")  # gets skipped, with a reason

result = ingest_folders(scratch)
print("ingested", len(result.manifest.records), "records")
for (label, noise), count in sorted(result.manifest.group_counts().items(), key=str):
    print("  %-8s %-6s %d" % (label.value, noise.value, count))
for skip in result.skipped:
    print("skipped:", skip.path, "--", skip.reason)

merged = merge_classes(result.manifest)
print("after merge:", {label.value: n for label, n in merged.class_counts().items()})

# same seed -> same assignment, forever; the noise tag survives the merge
split = stratified_split(merged, SplitSpec(train_fraction=0.8, seed=42))
for (label, part), count in sorted(split.split_counts().items(), key=str):
    print("  %-8s %-10s %d" % (label.value, part.value, count))

write_manifest(split, scratch / "manifest.json")
print("manifest at", scratch / "manifest.json")
