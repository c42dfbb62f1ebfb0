"""Seeded, order-independent augmentation pipeline.

Each (image id, copy index) pair owns an independent random stream derived
from the spec seed via the mixing recipe in :mod:`colpoprep.rng`, with stream
key ``"aug/" + image_id`` and stream index ``copy_index``. Augmenting with one
thread or many therefore produces identical bytes.

Parameter draw order is fixed per transform, in the order the transforms
appear in the spec:

* rotate: one uniform -> angle in [-max_degrees, +max_degrees]
* hflip / vflip: one uniform u, flip iff u < probability
* zoom: one uniform -> scale in [lo, hi]
* brightness_contrast: uniform -> alpha, then uniform -> beta
* gamma: one uniform -> exponent in [lo, hi]
* gaussian_noise: one uniform -> sigma in [sigma_lo, sigma_hi]; when sigma > 0,
  one standard normal per sample in row-major interleaved order (Box-Muller
  pairs), added as round_half_up(z * sigma) and clamped.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from colpoprep import imgproc
from colpoprep.dataset import DatasetManifest, ImageRecord, Split
from colpoprep.image_io import load_image, save_png
from colpoprep.rng import SplitMix64, derive_stream as _derive

SPEC_VERSION = 1
_MAX_SEED = (1 << 64) - 1


class TransformKind(enum.Enum):
    ROTATE = "rotate"
    HFLIP = "hflip"
    VFLIP = "vflip"
    ZOOM = "zoom"
    BRIGHTNESS_CONTRAST = "brightness_contrast"
    GAMMA = "gamma"
    GAUSSIAN_NOISE = "gaussian_noise"


_PARAM_NAMES: dict[TransformKind, tuple[str, ...]] = {
    TransformKind.ROTATE: ("max_degrees",),
    TransformKind.HFLIP: ("probability",),
    TransformKind.VFLIP: ("probability",),
    TransformKind.ZOOM: ("lo", "hi"),
    TransformKind.BRIGHTNESS_CONTRAST: ("alpha_lo", "alpha_hi", "beta_lo", "beta_hi"),
    TransformKind.GAMMA: ("lo", "hi"),
    TransformKind.GAUSSIAN_NOISE: ("sigma_lo", "sigma_hi"),
}


@dataclass(frozen=True)
class TransformDescriptor:
    kind: TransformKind
    params: dict[str, float]

    def __post_init__(self):
        expected = _PARAM_NAMES[self.kind]
        if set(self.params) != set(expected):
            raise ValueError(f"{self.kind.value}: expected params {expected}, got {sorted(self.params)}")
        p = self.params
        k = self.kind
        if k is TransformKind.ROTATE and p["max_degrees"] < 0:
            raise ValueError("max_degrees must be >= 0")
        if k in (TransformKind.HFLIP, TransformKind.VFLIP) and not 0 <= p["probability"] <= 1:
            raise ValueError("probability must be in [0, 1]")
        if k is TransformKind.ZOOM and not 0 < p["lo"] <= p["hi"]:
            raise ValueError("zoom range must satisfy 0 < lo <= hi")
        if k is TransformKind.BRIGHTNESS_CONTRAST:
            if not 0 <= p["alpha_lo"] <= p["alpha_hi"]:
                raise ValueError("alpha range must satisfy 0 <= lo <= hi")
            if p["beta_lo"] > p["beta_hi"]:
                raise ValueError("beta range must be ordered")
        if k is TransformKind.GAMMA and not 0 < p["lo"] <= p["hi"]:
            raise ValueError("gamma range must satisfy 0 < lo <= hi")
        if k is TransformKind.GAUSSIAN_NOISE and not 0 <= p["sigma_lo"] <= p["sigma_hi"]:
            raise ValueError("sigma range must satisfy 0 <= lo <= hi")


@dataclass(frozen=True)
class AugmentationSpec:
    seed: int
    transforms: tuple[TransformDescriptor, ...]
    copies_per_image: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MAX_SEED:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.copies_per_image < 0:
            raise ValueError("copies_per_image must be >= 0")


def default_spec(seed: int = 0, copies_per_image: int = 2) -> AugmentationSpec:
    """Conservative defaults: small rotations, flips, mild zoom/exposure jitter."""
    return AugmentationSpec(
        seed=seed,
        copies_per_image=copies_per_image,
        transforms=(
            TransformDescriptor(TransformKind.ROTATE, {"max_degrees": 15.0}),
            TransformDescriptor(TransformKind.HFLIP, {"probability": 0.5}),
            TransformDescriptor(TransformKind.ZOOM, {"lo": 0.9, "hi": 1.1}),
            TransformDescriptor(
                TransformKind.BRIGHTNESS_CONTRAST,
                {"alpha_lo": 0.8, "alpha_hi": 1.2, "beta_lo": -20.0, "beta_hi": 20.0},
            ),
            TransformDescriptor(TransformKind.GAMMA, {"lo": 0.8, "hi": 1.2}),
            TransformDescriptor(TransformKind.GAUSSIAN_NOISE, {"sigma_lo": 0.0, "sigma_hi": 8.0}),
        ),
    )


def derive_stream(spec: AugmentationSpec, image_id: str, copy_index: int) -> SplitMix64:
    """Random stream for one augmented copy; pure in (seed, id, index)."""
    return _derive(spec.seed, f"aug/{image_id}", copy_index)


def _apply_one(img: np.ndarray, t: TransformDescriptor, stream: SplitMix64) -> np.ndarray:
    p = t.params
    kind = t.kind
    if kind is TransformKind.ROTATE:
        degrees = stream.uniform(-p["max_degrees"], p["max_degrees"])
        return imgproc.rotate_bilinear(img, degrees)
    if kind is TransformKind.HFLIP:
        return np.ascontiguousarray(img[:, ::-1]) if stream.next_float() < p["probability"] else img
    if kind is TransformKind.VFLIP:
        return np.ascontiguousarray(img[::-1, :]) if stream.next_float() < p["probability"] else img
    if kind is TransformKind.ZOOM:
        return imgproc.zoom_bilinear(img, stream.uniform(p["lo"], p["hi"]))
    if kind is TransformKind.BRIGHTNESS_CONTRAST:
        alpha = stream.uniform(p["alpha_lo"], p["alpha_hi"])
        beta = stream.uniform(p["beta_lo"], p["beta_hi"])
        return imgproc.adjust_brightness_contrast(img, alpha, beta)
    if kind is TransformKind.GAMMA:
        return imgproc.gamma_correct(img, stream.uniform(p["lo"], p["hi"]))
    if kind is TransformKind.GAUSSIAN_NOISE:
        sigma = stream.uniform(p["sigma_lo"], p["sigma_hi"])
        if sigma <= 0:
            return img
        z = stream.gaussian_block(img.size).reshape(img.shape)
        noise = imgproc.round_half_up(z * sigma)
        return np.clip(img.astype(np.int64) + noise.astype(np.int64), 0, 255).astype(np.uint8)
    raise AssertionError(f"unhandled transform kind {kind}")


def apply_pipeline(img: np.ndarray, spec: AugmentationSpec, stream: SplitMix64) -> np.ndarray:
    """Apply the spec's transforms in order, drawing parameters from ``stream``."""
    out = img.copy()
    for t in spec.transforms:
        out = _apply_one(out, t, stream)
    return out


def augmented_id(image_id: str, copy_index: int) -> str:
    return f"{image_id}#aug{copy_index}"


def _augmented_filename(image_id: str, copy_index: int) -> str:
    return augmented_id(image_id.replace("/", "__"), copy_index) + ".png"


def augment_dataset(
    manifest: DatasetManifest,
    spec: AugmentationSpec,
    out_dir: str | Path,
    threads: int = 1,
) -> DatasetManifest:
    """Write ``copies_per_image`` augmented PNGs per training record.

    Validation records are never touched; the returned manifest extends the
    input with the new records (label and noise inherited, split Train).
    Output bytes are independent of ``threads``.
    """
    if any(r.split is None for r in manifest.records):
        raise ValueError("manifest must have split assignments before augmentation")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_records = [r for r in manifest.records if r.split is Split.TRAIN]
    assert all(r.split is not Split.VALIDATION for r in train_records)

    tasks = [(r, k) for r in train_records for k in range(spec.copies_per_image)]

    def run(task: tuple[ImageRecord, int]) -> ImageRecord:
        record, k = task
        stream = derive_stream(spec, record.id, k)
        img = load_image(record.path)
        out = apply_pipeline(img, spec, stream)
        filename = _augmented_filename(record.id, k)
        save_png(out, out_dir / filename)
        return ImageRecord(
            id=augmented_id(record.id, k),
            path=(out_dir / filename).as_posix(),
            label=record.label,
            noise=record.noise,
            split=Split.TRAIN,
        )

    if threads <= 1:
        new_records = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            new_records = list(pool.map(run, tasks))
    return DatasetManifest.from_records(list(manifest.records) + new_records, manifest.seed)


# ---------------------------------------------------------------------------
# spec file format


def spec_to_dict(spec: AugmentationSpec) -> dict:
    return {
        "version": SPEC_VERSION,
        "seed": spec.seed,
        "copies_per_image": spec.copies_per_image,
        "transforms": [{"kind": t.kind.value, **t.params} for t in spec.transforms],
    }


def write_augmentation_spec(spec: AugmentationSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n", encoding="utf-8")


def spec_from_dict(data: dict) -> AugmentationSpec:
    if not isinstance(data, dict):
        raise ValueError("augmentation spec must be a JSON object")
    expected = {"version", "seed", "copies_per_image", "transforms"}
    if set(data) != expected:
        bad = sorted(set(data) ^ expected)[0]
        raise ValueError(f"augmentation spec: unexpected or missing field {bad!r}")
    if data["version"] != SPEC_VERSION:
        raise ValueError(f"unsupported augmentation spec version {data['version']!r}")
    transforms = []
    for i, raw in enumerate(data["transforms"]):
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ValueError(f"transforms[{i}]: expected an object with a 'kind' field")
        kind_value = raw["kind"]
        try:
            kind = TransformKind(kind_value)
        except ValueError:
            raise ValueError(f"transforms[{i}]: unknown kind {kind_value!r}") from None
        params = {k: v for k, v in raw.items() if k != "kind"}
        for name, value in params.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"transforms[{i}].{name}: expected a number")
        transforms.append(TransformDescriptor(kind, {k: float(v) for k, v in params.items()}))
    return AugmentationSpec(
        seed=data["seed"],
        transforms=tuple(transforms),
        copies_per_image=data["copies_per_image"],
    )


def read_augmentation_spec(path: str | Path) -> AugmentationSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
