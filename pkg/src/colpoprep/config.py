"""Pipeline configuration and ablation plans.

Configs are JSON with a ``version`` field. Parsing is fail-closed: unknown
fields, wrong types, and out-of-range values are rejected with the offending
field path, and parse -> serialize -> parse round-trips to an equal config.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

from colpoprep.augment import AugmentationSpec, spec_from_dict, spec_to_dict
from colpoprep.dataset import SplitSpec
from colpoprep.imgproc import ArtifactRemovalParams

CONFIG_VERSION = 1
PLAN_VERSION = 1

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` holds the dotted path that failed."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PipelineConfig:
    dataset_root: str
    work_dir: str
    preprocess: ArtifactRemovalParams
    output_size: tuple[int, int]
    split: SplitSpec
    augment: AugmentationSpec
    threshold: float = 0.5

    def __post_init__(self):
        if not self.dataset_root:
            raise ValueError("dataset_root must be non-empty")
        if not self.work_dir:
            raise ValueError("work_dir must be non-empty")
        w, h = self.output_size
        if w < 1 or h < 1:
            raise ValueError(f"output_size must be positive, got {self.output_size}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")


def default_config(dataset_root: str = "data", work_dir: str = "work") -> PipelineConfig:
    from colpoprep.augment import default_spec

    return PipelineConfig(
        dataset_root=dataset_root,
        work_dir=work_dir,
        preprocess=ArtifactRemovalParams(),
        output_size=(224, 224),
        split=SplitSpec(),
        augment=default_spec(),
        threshold=0.5,
    )


# ---------------------------------------------------------------------------
# strict JSON walking


class _Obj:
    """A JSON object being consumed field by field; leftovers are rejected."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        self.data = dict(data)
        self.path = path

    def child(self, field: str) -> "_Obj":
        return _Obj(self._pop(field), f"{self.path}.{field}")

    def _pop(self, field: str):
        if field not in self.data:
            raise ConfigError(f"{self.path}.{field}", "missing required field")
        return self.data.pop(field)

    def take_raw(self, field: str):
        return self._pop(field)

    def take_str(self, field: str) -> str:
        v = self._pop(field)
        if not isinstance(v, str):
            raise ConfigError(f"{self.path}.{field}", f"expected a string, got {type(v).__name__}")
        return v

    def take_bool(self, field: str) -> bool:
        v = self._pop(field)
        if not isinstance(v, bool):
            raise ConfigError(f"{self.path}.{field}", f"expected a boolean, got {type(v).__name__}")
        return v

    def take_int(self, field: str, lo: int | None = None, hi: int | None = None) -> int:
        v = self._pop(field)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self.path}.{field}", f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{self.path}.{field}", f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            raise ConfigError(f"{self.path}.{field}", f"must be <= {hi}, got {v}")
        return v

    def take_number(self, field: str, lo: float | None = None, hi: float | None = None) -> float:
        v = self._pop(field)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.path}.{field}", f"expected a number, got {v!r}")
        v = float(v)
        if math.isnan(v):
            raise ConfigError(f"{self.path}.{field}", "must not be NaN")
        if lo is not None and v < lo:
            raise ConfigError(f"{self.path}.{field}", f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            raise ConfigError(f"{self.path}.{field}", f"must be <= {hi}, got {v}")
        return v

    def take_int_pair(self, field: str, lo: int = 1) -> tuple[int, int]:
        v = self._pop(field)
        ok = (
            isinstance(v, list)
            and len(v) == 2
            and all(isinstance(x, int) and not isinstance(x, bool) and x >= lo for x in v)
        )
        if not ok:
            raise ConfigError(f"{self.path}.{field}", f"expected a pair of integers >= {lo}, got {v!r}")
        return (v[0], v[1])

    def finish(self) -> None:
        if self.data:
            field = sorted(self.data)[0]
            raise ConfigError(f"{self.path}.{field}", "unknown field")


def _odd_kernel(obj: _Obj, field: str) -> int:
    k = obj.take_int(field, lo=1)
    if k % 2 == 0:
        raise ConfigError(f"{obj.path}.{field}", f"kernel size must be odd, got {k}")
    return k


def _preprocess_from(obj: _Obj) -> tuple[ArtifactRemovalParams, tuple[int, int]]:
    crop_fraction = obj.take_number("crop_fraction", lo=0.0, hi=1.0)
    if crop_fraction == 0.0:
        raise ConfigError(f"{obj.path}.crop_fraction", "must be in (0, 1]")
    clahe = obj.child("clahe")
    clahe_enabled = clahe.take_bool("enabled")
    clip_limit = clahe.take_number("clip_limit", lo=1.0)
    tiles = clahe.take_int_pair("tiles")
    clahe.finish()
    median = obj.child("median")
    median_enabled = median.take_bool("enabled")
    median_kernel = _odd_kernel(median, "kernel")
    median.finish()
    edge = obj.child("edge_inpaint")
    edge_enabled = edge.take_bool("enabled")
    canny_low = edge.take_number("canny_low", lo=0.0)
    canny_high = edge.take_number("canny_high", lo=0.0)
    if canny_high <= canny_low:
        raise ConfigError(f"{edge.path}.canny_high", f"must exceed canny_low, got {canny_low}/{canny_high}")
    band = edge.take_number("border_band_fraction", lo=0.0, hi=0.5)
    if band == 0.0:
        raise ConfigError(f"{edge.path}.border_band_fraction", "must be in (0, 0.5]")
    dilate_kernel = _odd_kernel(edge, "mask_dilate_kernel")
    edge.finish()
    morph = obj.child("morphology")
    morph_enabled = morph.take_bool("enabled")
    morph_kernel = _odd_kernel(morph, "kernel")
    morph.finish()
    output_size = obj.take_int_pair("output_size")
    obj.finish()
    params = ArtifactRemovalParams(
        crop_fraction=crop_fraction,
        clahe_enabled=clahe_enabled,
        clahe_clip_limit=clip_limit,
        clahe_tiles=tiles,
        median_enabled=median_enabled,
        median_kernel=median_kernel,
        edge_inpaint_enabled=edge_enabled,
        canny_low=canny_low,
        canny_high=canny_high,
        border_band_fraction=band,
        mask_dilate_kernel=dilate_kernel,
        morphology_enabled=morph_enabled,
        morphology_kernel=morph_kernel,
    )
    return params, output_size


def config_from_dict(data: dict, path: str = "config") -> PipelineConfig:
    obj = _Obj(data, path)
    version = obj.take_int("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{path}.version", f"unsupported version {version} (expected {CONFIG_VERSION})")
    dataset_root = obj.take_str("dataset_root")
    work_dir = obj.take_str("work_dir")
    preprocess, output_size = _preprocess_from(obj.child("preprocess"))
    split_obj = obj.child("split")
    train_fraction = split_obj.take_number("train_fraction")
    split_seed = split_obj.take_int("seed", lo=0, hi=(1 << 64) - 1)
    split_obj.finish()
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"{path}.split.train_fraction", f"must be in (0, 1), got {train_fraction}")
    augment_raw = obj.take_raw("augment")
    if not isinstance(augment_raw, dict):
        raise ConfigError(f"{path}.augment", "expected an object")
    try:
        augment = spec_from_dict(augment_raw)
    except ValueError as exc:
        raise ConfigError(f"{path}.augment", str(exc)) from None
    threshold = obj.take_number("threshold", lo=0.0, hi=1.0)
    obj.finish()
    try:
        return PipelineConfig(
            dataset_root=dataset_root,
            work_dir=work_dir,
            preprocess=preprocess,
            output_size=output_size,
            split=SplitSpec(train_fraction=train_fraction, seed=split_seed),
            augment=augment,
            threshold=threshold,
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def config_to_dict(config: PipelineConfig) -> dict:
    p = config.preprocess
    return {
        "version": CONFIG_VERSION,
        "dataset_root": config.dataset_root,
        "work_dir": config.work_dir,
        "preprocess": {
            "crop_fraction": p.crop_fraction,
            "clahe": {
                "enabled": p.clahe_enabled,
                "clip_limit": p.clahe_clip_limit,
                "tiles": list(p.clahe_tiles),
            },
            "median": {"enabled": p.median_enabled, "kernel": p.median_kernel},
            "edge_inpaint": {
                "enabled": p.edge_inpaint_enabled,
                "canny_low": p.canny_low,
                "canny_high": p.canny_high,
                "border_band_fraction": p.border_band_fraction,
                "mask_dilate_kernel": p.mask_dilate_kernel,
            },
            "morphology": {"enabled": p.morphology_enabled, "kernel": p.morphology_kernel},
            "output_size": list(config.output_size),
        },
        "split": {"train_fraction": config.split.train_fraction, "seed": config.split.seed},
        "augment": spec_to_dict(config.augment),
        "threshold": config.threshold,
    }


def read_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON (line {exc.lineno})") from None
    return config_from_dict(data)


def write_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")


def override_seed(config: PipelineConfig, seed: int) -> PipelineConfig:
    """Replace both split and augmentation seeds (the --seed flag)."""
    return replace(
        config,
        split=replace(config.split, seed=seed),
        augment=replace(config.augment, seed=seed),
    )


# ---------------------------------------------------------------------------
# ablation plans


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; non-dict override values replace base values."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class AblationVariant:
    name: str
    overrides: dict
    predictions_csv: str | None = None

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"variant name {self.name!r} is not filesystem-safe")


@dataclass(frozen=True)
class AblationPlan:
    base: PipelineConfig
    variants: tuple[AblationVariant, ...]
    base_predictions_csv: str | None = None

    def __post_init__(self):
        names = [v.name for v in self.variants]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValueError(f"duplicate variant names: {sorted(dupes)}")

    def resolve(self, variant: AblationVariant) -> PipelineConfig:
        merged = deep_merge(config_to_dict(self.base), variant.overrides)
        return config_from_dict(merged, path=f"variants.{variant.name}")


def plan_from_dict(data: dict) -> AblationPlan:
    obj = _Obj(data, "plan")
    version = obj.take_int("version")
    if version != PLAN_VERSION:
        raise ConfigError("plan.version", f"unsupported version {version} (expected {PLAN_VERSION})")
    base = config_from_dict(obj.take_raw("base"), path="plan.base")
    base_csv = None
    if "predictions_csv" in obj.data:
        base_csv = obj.take_str("predictions_csv")
    variants_raw = obj.take_raw("variants")
    obj.finish()
    if not isinstance(variants_raw, list):
        raise ConfigError("plan.variants", "expected an array")
    variants = []
    for i, item in enumerate(variants_raw):
        vobj = _Obj(item, f"plan.variants[{i}]")
        name = vobj.take_str("name")
        overrides = vobj.take_raw("overrides")
        if not isinstance(overrides, dict):
            raise ConfigError(f"plan.variants[{i}].overrides", "expected an object")
        csv_path = None
        if "predictions_csv" in vobj.data:
            csv_path = vobj.take_str("predictions_csv")
        vobj.finish()
        try:
            variants.append(AblationVariant(name=name, overrides=overrides, predictions_csv=csv_path))
        except ValueError as exc:
            raise ConfigError(f"plan.variants[{i}].name", str(exc)) from None
    try:
        plan = AblationPlan(base=base, variants=tuple(variants), base_predictions_csv=base_csv)
    except ValueError as exc:
        raise ConfigError("plan.variants", str(exc)) from None
    for variant in plan.variants:
        plan.resolve(variant)  # fail fast on bad overrides, with the variant's field path
    return plan


def plan_to_dict(plan: AblationPlan) -> dict:
    data: dict = {"version": PLAN_VERSION, "base": config_to_dict(plan.base)}
    if plan.base_predictions_csv is not None:
        data["predictions_csv"] = plan.base_predictions_csv
    data["variants"] = [
        {
            "name": v.name,
            "overrides": v.overrides,
            **({"predictions_csv": v.predictions_csv} if v.predictions_csv is not None else {}),
        }
        for v in plan.variants
    ]
    return data


def read_plan(path: str | Path) -> AblationPlan:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("plan", f"{path} is not valid JSON (line {exc.lineno})") from None
    return plan_from_dict(data)


def write_plan(plan: AblationPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=2) + "\n", encoding="utf-8")
