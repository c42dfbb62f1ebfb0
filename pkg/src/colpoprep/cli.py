"""Command-line interface: ingest, split, preprocess, augment, evaluate, plot, ablate.

Record paths inside a manifest file are interpreted relative to the directory
containing that manifest (absolute paths pass through), so moving a work tree
does not invalidate it. Failures are reported as a single machine-parseable
JSON line on stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from colpoprep import augment as aug
from colpoprep import config as cfg
from colpoprep import dataset as ds
from colpoprep import metrics as mx
from colpoprep.image_io import load_image, save_png
from colpoprep.imgproc import remove_instrument_artifacts, resize_bilinear

THREADS_ENV = "COLPO_PREP_THREADS"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse normally prints multi-line usage on bad flags; keep errors one line
    def error(self, message):
        raise CliError(f"usage: {message}")


# ---------------------------------------------------------------------------
# path handling


def _to_posix(path: str) -> str:
    return path.replace(os.sep, "/")


def _resolve_manifest(manifest: ds.DatasetManifest, manifest_path: Path) -> ds.DatasetManifest:
    base = manifest_path.parent
    resolved = []
    for r in manifest.records:
        p = Path(r.path)
        if not p.is_absolute():
            p = base / p
        resolved.append(replace(r, path=p.as_posix()))
    return ds.DatasetManifest(tuple(resolved), manifest.seed)


def _relativize_manifest(manifest: ds.DatasetManifest, base_dir: Path) -> ds.DatasetManifest:
    out = []
    for r in manifest.records:
        try:
            rel = os.path.relpath(r.path, base_dir)
        except ValueError:  # different drive; keep absolute
            rel = r.path
        out.append(replace(r, path=_to_posix(rel)))
    return ds.DatasetManifest(tuple(out), manifest.seed)


def _read_manifest(path: str) -> ds.DatasetManifest:
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise CliError(f"manifest not found: {path}")
    return _resolve_manifest(ds.read_manifest(manifest_path), manifest_path)


def _write_manifest(manifest: ds.DatasetManifest, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    ds.write_manifest(_relativize_manifest(manifest, path.parent), path)


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise CliError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise CliError(f"thread count must be >= 1, got {n}")
    return n


def _seed_value(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise CliError(f"--seed must be an integer, got {text!r}") from None
    if not 0 <= seed < (1 << 64):
        raise CliError("--seed must fit in an unsigned 64-bit integer")
    return seed


def _load_config(args) -> cfg.PipelineConfig:
    if not args.config:
        raise CliError("--config is required for this command")
    if not Path(args.config).is_file():
        raise CliError(f"config not found: {args.config}")
    config = cfg.read_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = cfg.override_seed(config, _seed_value(args.seed))
    return config


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    root = Path(args.root)
    result = ds.ingest_folders(root)
    out_path = Path(args.out)
    _write_manifest(result.manifest, out_path)
    counts = {f"{lab.value}/{noi.value}": n for (lab, noi), n in result.manifest.group_counts().items()}
    _emit(
        {
            "command": "ingest",
            "manifest": str(out_path),
            "records": len(result.manifest.records),
            "counts": counts,
            "skipped": [{"path": s.path, "reason": s.reason} for s in result.skipped],
        }
    )
    return 0


def cmd_split(args) -> int:
    manifest = _read_manifest(args.manifest)
    if args.config:
        spec = _load_config(args).split
    else:
        seed = _seed_value(args.seed) if args.seed is not None else 0
        spec = ds.SplitSpec(train_fraction=args.train_fraction, seed=seed)
    if args.config and args.seed is not None:
        spec = replace(spec, seed=_seed_value(args.seed))
    merged = ds.merge_classes(manifest)
    split_manifest = ds.stratified_split(merged, spec)
    out_path = Path(args.out if args.out else args.manifest)
    _write_manifest(split_manifest, out_path)
    by_split = {}
    for (label, split), n in split_manifest.split_counts().items():
        by_split[f"{label.value}/{split.value}"] = n
    _emit({"command": "split", "manifest": str(out_path), "seed": spec.seed, "counts": by_split})
    return 0


def _preprocess_filename(record_id: str) -> str:
    name = record_id.replace("/", "__")
    return name if name.endswith(".png") else name + ".png"


def _preprocess_manifest(
    manifest: ds.DatasetManifest,
    config: cfg.PipelineConfig,
    out_dir: Path,
    threads: int,
) -> ds.DatasetManifest:
    out_dir.mkdir(parents=True, exist_ok=True)
    out_w, out_h = config.output_size

    def run(record: ds.ImageRecord) -> ds.ImageRecord:
        img = load_image(record.path)
        out = remove_instrument_artifacts(img, config.preprocess)
        out = resize_bilinear(out, out_w, out_h)
        filename = _preprocess_filename(record.id)
        save_png(out, out_dir / filename)
        return replace(record, path=(out_dir / filename).as_posix())

    if threads <= 1:
        new_records = [run(r) for r in manifest.records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            new_records = list(pool.map(run, manifest.records))
    return ds.DatasetManifest.from_records(new_records, manifest.seed)


def cmd_preprocess(args) -> int:
    config = _load_config(args)
    manifest = _read_manifest(args.manifest)
    out_dir = Path(args.out)
    threads = _threads(args)
    result = _preprocess_manifest(manifest, config, out_dir, threads)
    _write_manifest(result, out_dir / "manifest.json")
    _emit(
        {
            "command": "preprocess",
            "manifest": str(out_dir / "manifest.json"),
            "images": len(result.records),
            "output_size": list(config.output_size),
            "threads": threads,
        }
    )
    return 0


def cmd_augment(args) -> int:
    if bool(args.spec) == bool(args.config):
        raise CliError("provide exactly one of --spec or --config")
    if args.spec:
        if not Path(args.spec).is_file():
            raise CliError(f"augmentation spec not found: {args.spec}")
        spec = aug.read_augmentation_spec(args.spec)
        if args.seed is not None:
            spec = replace(spec, seed=_seed_value(args.seed))
    else:
        spec = _load_config(args).augment
    manifest = _read_manifest(args.manifest)
    out_dir = Path(args.out)
    threads = _threads(args)
    combined = aug.augment_dataset(manifest, spec, out_dir, threads=threads)
    _write_manifest(combined, out_dir / "manifest.json")
    made = len(combined.records) - len(manifest.records)
    _emit(
        {
            "command": "augment",
            "manifest": str(out_dir / "manifest.json"),
            "new_images": made,
            "records": len(combined.records),
            "threads": threads,
        }
    )
    return 0


def _evaluate(predictions_csv: str, threshold: float, out_report: Path) -> mx.MetricsReport:
    if not Path(predictions_csv).is_file():
        raise CliError(f"predictions file not found: {predictions_csv}")
    preds = mx.read_predictions_csv(predictions_csv)
    rep = mx.report(mx.confusion(preds, threshold), threshold=threshold)
    out_report.parent.mkdir(parents=True, exist_ok=True)
    mx.write_report(rep, out_report)
    return rep


def cmd_evaluate(args) -> int:
    threshold = args.threshold
    if threshold is None:
        threshold = _load_config(args).threshold if args.config else 0.5
    if not 0.0 <= threshold <= 1.0:
        raise CliError(f"--threshold must be in [0, 1], got {threshold}")
    rep = _evaluate(args.predictions, threshold, Path(args.out))
    sys.stdout.write(mx.render_classification_report(rep))
    return 0


def cmd_plot(args) -> int:
    if bool(args.history) == bool(args.report):
        raise CliError("provide exactly one of --history or --report")
    out_path = Path(args.out)
    if args.history:
        if not Path(args.history).is_file():
            raise CliError(f"history file not found: {args.history}")
        history = mx.read_history_csv(args.history)
        mx.plot_curves(history, out_path, kind=args.kind)
    else:
        if not Path(args.report).is_file():
            raise CliError(f"report file not found: {args.report}")
        rep = mx.read_report(args.report)
        mx.plot_confusion(rep.confusion, out_path)
    _emit({"command": "plot", "svg": str(out_path)})
    return 0


def _run_variant(
    name: str,
    config: cfg.PipelineConfig,
    predictions_csv: str | None,
    out_dir: Path,
    threads: int,
) -> tuple[str, mx.MetricsReport] | None:
    """One ablation arm: evaluate its predictions if given, else run the
    preprocessing pipeline natively. Returns a comparison row when metrics exist."""
    variant_dir = out_dir / name
    variant_dir.mkdir(parents=True, exist_ok=True)
    cfg.write_config(config, variant_dir / "config.json")
    if predictions_csv is not None:
        rep = _evaluate(predictions_csv, config.threshold, variant_dir / "report.json")
        (variant_dir / "report.txt").write_text(
            mx.render_classification_report(rep), encoding="utf-8"
        )
        return name, rep
    root = Path(config.dataset_root)
    if not root.is_dir():
        raise CliError(f"dataset root not found: {config.dataset_root}")
    result = ds.ingest_folders(root)
    split_manifest = ds.stratified_split(ds.merge_classes(result.manifest), config.split)
    _write_manifest(split_manifest, variant_dir / "manifest.json")
    pre = _preprocess_manifest(split_manifest, config, variant_dir / "preprocessed", threads)
    _write_manifest(pre, variant_dir / "preprocessed" / "manifest.json")
    combined = aug.augment_dataset(pre, config.augment, variant_dir / "augmented", threads=threads)
    _write_manifest(combined, variant_dir / "augmented" / "manifest.json")
    return None


def cmd_ablate(args) -> int:
    if not Path(args.plan).is_file():
        raise CliError(f"plan not found: {args.plan}")
    plan = cfg.read_plan(args.plan)
    out_dir = Path(args.out)
    threads = _threads(args)
    base = plan.base
    if args.seed is not None:
        base = cfg.override_seed(base, _seed_value(args.seed))
        plan = replace(plan, base=base)

    arms: list[tuple[str, cfg.PipelineConfig, str | None]] = [
        ("base", base, plan.base_predictions_csv)
    ]
    for variant in plan.variants:
        arms.append((variant.name, plan.resolve(variant), variant.predictions_csv))

    rows: list[tuple[str, mx.MetricsReport]] = []
    failures: list[dict] = []
    for name, config, predictions_csv in arms:
        try:
            row = _run_variant(name, config, predictions_csv, out_dir, threads)
        except (CliError, ValueError, OSError) as exc:
            failures.append({"variant": name, "error": str(exc)})
            continue
        if row is not None:
            rows.append(row)

    if rows:
        text, data = mx.render_report(rows)
        (out_dir / "comparison.txt").write_text(text, encoding="utf-8")
        (out_dir / "comparison.json").write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    if failures:
        raise CliError(
            f"{len(failures)} variant(s) failed: "
            + "; ".join(f"{f['variant']}: {f['error']}" for f in failures)
        )
    _emit(
        {
            "command": "ablate",
            "out": str(out_dir),
            "variants": [name for name, _, _ in arms],
            "compared": [name for name, _ in rows],
        }
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colpoprep", description="Colposcopy image preprocessing pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=True, threads=True):
        if config:
            p.add_argument("--config", help="pipeline config JSON")
        if seed:
            p.add_argument("--seed", help="override config seeds (u64)")
        if threads:
            p.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV}, default 1)")

    p = sub.add_parser("ingest", description="Scan class folders into a manifest")
    p.add_argument("--root", required=True, help="dataset root with Normal/NormalNoise/Abnormal/AbnormalNoise")
    p.add_argument("--out", required=True, help="output manifest path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", description="Assign stratified train/validation splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--out", help="output manifest path (default: rewrite input)")
    common(p, threads=False)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("preprocess", description="Artifact removal, enhancement, and resize")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output image directory")
    common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("augment", description="Write augmented copies of training images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--spec", help="augmentation spec JSON (alternative to --config)")
    p.add_argument("--out", required=True, help="output image directory")
    common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("evaluate", description="Score a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--threshold", type=float, help="abnormal-probability cutoff (default 0.5)")
    p.add_argument("--out", required=True, help="output report JSON path")
    common(p, seed=False, threads=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", description="Render training curves or a confusion matrix to SVG")
    p.add_argument("--history", help="training history CSV")
    p.add_argument("--kind", choices=("accuracy", "loss"), default="accuracy")
    p.add_argument("--report", help="report JSON (plots its confusion matrix)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("ablate", description="Run an ablation plan")
    p.add_argument("--plan", required=True, help="ablation plan JSON")
    p.add_argument("--out", required=True, help="output directory")
    common(p, config=False)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    command = "?"
    try:
        args = parser.parse_args(argv)
        command = args.command
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc), "command": command}), file=sys.stderr)
        return 2 if str(exc).startswith("usage:") else 1
    except (cfg.ConfigError, ds.ManifestError, ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "command": command}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
