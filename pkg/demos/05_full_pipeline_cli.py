"""
The whole pipeline through the CLI
==================================

ingest -> split -> preprocess -> augment -> evaluate -> plot, all driven
through the same entry points the `colpoprep` console command uses, plus a
two-arm ablation at the end. Each command prints a single JSON status line;
evaluate prints the rendered report instead.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from colpoprep.cli import main
from colpoprep.image_io import save_png

work = Path(tempfile.mkdtemp(prefix="colpoprep_cli_demo_"))
print("working under", work)

rng = np.random.default_rng(11)
for folder, n in {"Normal": 6, "NormalNoise": 2, "Abnormal": 9, "AbnormalNoise": 3}.items():
    for i in range(n):
        save_png(rng.integers(0, 256, size=(20, 20, 3), dtype=np.uint8), work / "raw" / folder / f"{i:02d}.png")

config = {
    "version": 1,
    "dataset_root": str(work / "raw"),
    "work_dir": str(work),
    "preprocess": {
        "crop_fraction": 0.9,
        "clahe": {"enabled": True, "clip_limit": 2.0, "tiles": [2, 2]},
        "median": {"enabled": True, "kernel": 3},
        "edge_inpaint": {"enabled": True, "canny_low": 50.0, "canny_high": 150.0,
                         "border_band_fraction": 0.1, "mask_dilate_kernel": 3},
        "morphology": {"enabled": True, "kernel": 3},
        "output_size": [32, 32],
    },
    "split": {"train_fraction": 0.8, "seed": 9},
    "augment": {
        "version": 1, "seed": 9, "copies_per_image": 2,
        "transforms": [
            {"kind": "rotate", "max_degrees": 15.0},
            {"kind": "hflip", "probability": 0.5},
            {"kind": "gaussian_noise", "sigma_lo": 0.0, "sigma_hi": 5.0},
        ],
    },
    "threshold": 0.5,
}
cfg_path = work / "config.json"
cfg_path.write_text(json.dumps(config, indent=2))

manifest = work / "manifest.json"
for argv in (
    ["ingest", "--root", str(work / "raw"), "--out", str(manifest)],
    ["split", "--manifest", str(manifest), "--config", str(cfg_path)],
    ["preprocess", "--manifest", str(manifest), "--config", str(cfg_path), "--out", str(work / "pre"), "--threads", "4"],
    ["augment", "--manifest", str(work / "pre" / "manifest.json"), "--config", str(cfg_path), "--out", str(work / "aug")],
):
    code = main(argv)
    assert code == 0, argv

# fake a model's validation predictions so evaluate/plot have input
preds = work / "predictions.csv"
lines = ["id,true_label,prob_abnormal"]
rng2 = np.random.default_rng(5)
for i in range(12):
    label = "Abnormal" if i < 8 else "Normal"
    p = rng2.uniform(0.4, 1.0) if label == "Abnormal" else rng2.uniform(0.0, 0.6)
    lines.append(f"val{i:02d}.png,{label},{p!r}")
preds.write_text("\n".join(lines) + "\n")

main(["evaluate", "--predictions", str(preds), "--out", str(work / "report.json")])
main(["plot", "--report", str(work / "report.json"), "--out", str(work / "confusion.svg")])
print("confusion SVG at", work / "confusion.svg")

# ablation: same predictions scored at two extra thresholds, one arm per variant
plan = {
    "version": 1,
    "base": config,
    "predictions_csv": str(preds),
    "variants": [
        {"name": "strict", "overrides": {"threshold": 0.8}, "predictions_csv": str(preds)},
        {"name": "lenient", "overrides": {"threshold": 0.2}, "predictions_csv": str(preds)},
    ],
}
(work / "plan.json").write_text(json.dumps(plan))
main(["ablate", "--plan", str(work / "plan.json"), "--out", str(work / "ablation")])
print((work / "ablation" / "comparison.txt").read_text())
