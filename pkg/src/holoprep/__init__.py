"""Cross-modality microscopy dataset engineering toolkit.

Registers holographic slides to their optical counterparts, propagates
annotations between the modalities, and turns aligned gigapixel frames into
model-ready detection and classification datasets: tiling, black-area
screening, bounding-box expansion, auto-label merging, stratified splitting,
class weighting, seeded augmentation, and metric evaluation.
"""

from .model import (
    UNKNOWN_CLASS,
    Annotation,
    BBox,
    DatasetManifest,
    ImageRecord,
    Modality,
    Raster,
    SimilarityTransform,
    Source,
    Space,
    Split,
)
from .registration import (
    PointPair,
    RegistrationReport,
    apply_to_point,
    estimate_similarity,
    invert,
    map_bbox,
    warp_image,
)
from .prep import (
    ClassWeightTable,
    InstanceCounts,
    SplitAssignment,
    SplitItem,
    Tile,
    assign_classes_from_image,
    black_fraction,
    class_weights,
    count_instances,
    expand_bbox,
    extract_crops,
    merge_labels,
    screen_tiles,
    split_dataset,
    tile_grid,
    tile_image,
)
from .augment import (
    AugmentationPolicy,
    AugmentResult,
    augment,
    classification_policy_default,
    detection_policy_default,
    maybe_mixup,
    mixup,
)
from .evaluation import (
    Detection,
    EvalResult,
    average_precision,
    classification_metrics,
    iou,
    map50,
    match_detections,
)
from .report import (
    FactorReport,
    RatioReport,
    Table,
    compare_runs,
    expansion_factor,
    table_instances,
    table_splits,
)
from .config import ConfigError, PipelineConfig

__version__ = "0.1.0"

__all__ = [
    "UNKNOWN_CLASS",
    "Annotation",
    "AugmentationPolicy",
    "AugmentResult",
    "BBox",
    "ClassWeightTable",
    "ConfigError",
    "DatasetManifest",
    "Detection",
    "EvalResult",
    "FactorReport",
    "ImageRecord",
    "InstanceCounts",
    "Modality",
    "PipelineConfig",
    "PointPair",
    "Raster",
    "RatioReport",
    "RegistrationReport",
    "SimilarityTransform",
    "Source",
    "Space",
    "Split",
    "SplitAssignment",
    "SplitItem",
    "Table",
    "Tile",
    "apply_to_point",
    "assign_classes_from_image",
    "augment",
    "average_precision",
    "black_fraction",
    "class_weights",
    "classification_metrics",
    "classification_policy_default",
    "compare_runs",
    "count_instances",
    "detection_policy_default",
    "estimate_similarity",
    "expand_bbox",
    "expansion_factor",
    "extract_crops",
    "invert",
    "iou",
    "map50",
    "map_bbox",
    "match_detections",
    "maybe_mixup",
    "merge_labels",
    "mixup",
    "screen_tiles",
    "split_dataset",
    "table_instances",
    "table_splits",
    "tile_grid",
    "tile_image",
    "warp_image",
]
