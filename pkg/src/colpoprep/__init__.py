"""Deterministic preprocessing, augmentation, and evaluation for two-class
colposcopy image datasets."""

__version__ = "0.1.0"

from colpoprep.augment import (
    AugmentationSpec,
    TransformDescriptor,
    TransformKind,
    apply_pipeline,
    augment_dataset,
    default_spec,
    read_augmentation_spec,
    write_augmentation_spec,
)
from colpoprep.config import (
    AblationPlan,
    AblationVariant,
    ConfigError,
    PipelineConfig,
    default_config,
    read_config,
    read_plan,
    write_config,
    write_plan,
)
from colpoprep.dataset import (
    ClassLabel,
    DatasetManifest,
    ImageRecord,
    ManifestError,
    NoiseTag,
    Split,
    SplitSpec,
    ingest_folders,
    merge_classes,
    read_manifest,
    stratified_split,
    write_manifest,
)
from colpoprep.image_io import load_image, save_png
from colpoprep.imgproc import (
    ArtifactRemovalParams,
    adjust_brightness_contrast,
    canny,
    central_crop,
    clahe,
    dilate,
    erode,
    gamma_correct,
    median_blur,
    morph_close,
    morph_open,
    normalize,
    remove_instrument_artifacts,
    resize_bilinear,
    rotate_bilinear,
    to_gray,
    zoom_bilinear,
)
from colpoprep.metrics import (
    ConfusionMatrix,
    MetricsReport,
    PredictionRecord,
    TrainingHistory,
    confusion,
    plot_confusion,
    plot_curves,
    read_history_csv,
    read_predictions_csv,
    render_classification_report,
    render_report,
    report,
    threshold_sweep,
)
from colpoprep.rng import SplitMix64, derive_stream, fnv1a64, mix64
