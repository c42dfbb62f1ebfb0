"""PNG/JPEG decode and PNG encode, the only image file formats supported."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

_READABLE_FORMATS = ("PNG", "JPEG")


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG or JPEG file to a uint8 array, (h, w) or (h, w, 3)."""
    with Image.open(path) as im:
        if im.format not in _READABLE_FORMATS:
            raise ValueError(f"{path}: unsupported image format {im.format!r}")
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_png(img: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit grayscale or RGB array as a PNG file."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got dtype {img.dtype}")
    mode = "L" if img.ndim == 2 else "RGB"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode=mode).save(path, format="PNG")
