"""
Preprocessing walkthrough
=========================

Builds a synthetic "instrument" image (bright rim around darker tissue),
then runs each preprocessing stage on its own so the effect of every knob
is visible, and finally the combined artifact-removal pass.

Run from the repo root:  python3 demos/01_preprocessing_walkthrough.py
Outputs land in demos/out/.
"""

from pathlib import Path

import numpy as np

import colpoprep.imgproc as ip
from colpoprep.image_io import save_png

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# a 96x96 scene: dark-ish "tissue" with a brighter lesion-ish patch and a
# bright 2px instrument rim around the border
rng = np.random.default_rng(7)
img = rng.integers(40, 140, size=(96, 96), dtype=np.uint8)
img[34:58, 30:62] = rng.integers(170, 210, size=(24, 32), dtype=np.uint8)
img[:2, :] = img[-2:, :] = 255
img[:, :2] = img[:, -2:] = 255
save_png(img, out_dir / "scene.png")
print("scene:", img.shape, "min/max", img.min(), img.max())

# central crop keeps the middle 80% per side
cropped = ip.central_crop(img, 0.8)
print("cropped:", cropped.shape)  # 96 -> 76 per side

# CLAHE spreads local contrast; clip limit 2.0 over an 8x8 tile grid
enhanced = ip.clahe(cropped, clip_limit=2.0, tiles=(8, 8))
save_png(enhanced, out_dir / "clahe.png")
print("clahe:   min/max", enhanced.min(), enhanced.max())

# median blur knocks out salt-and-pepper noise without smearing edges much
smoothed = ip.median_blur(enhanced, 5)
save_png(smoothed, out_dir / "median.png")

# canny gives a boolean edge mask; the patch boundary shows up as an edge
edges = ip.canny(smoothed, 50.0, 150.0)
print("canny:   %d edge pixels" % int(edges.sum()))
save_png((edges * np.uint8(255)), out_dir / "edges.png")

# the combined pass: crop, enhance, denoise, find rim edges near the border,
# inpaint them from the nearest untouched pixel, then open+close to tidy up
params = ip.ArtifactRemovalParams()  # defaults shown in the dataclass
cleaned = ip.remove_instrument_artifacts(img, params)
save_png(cleaned, out_dir / "cleaned.png")
print("cleaned:", cleaned.shape, "rim gone:", int((cleaned == 255).sum()), "pixels still saturated")

# resizing uses pixel-center sampling, so a constant image stays constant
resized = ip.resize_bilinear(cleaned, 224, 224)
save_png(resized, out_dir / "resized_224.png")
print("resized:", resized.shape)
