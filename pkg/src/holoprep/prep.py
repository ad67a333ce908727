"""From aligned full-resolution images to model-ready datasets.

Covers grid tiling with annotation reassignment, crop extraction for
classification, black-area screening of warped frames, bounding-box area
expansion, auto-label merging and class assignment, stratified splitting,
instance counting, and inverse-frequency class weights.
"""

from __future__ import annotations

import logging
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .model import (
    UNKNOWN_CLASS,
    Annotation,
    BBox,
    DatasetManifest,
    ImageRecord,
    Raster,
    Source,
    Space,
    Split,
)
from .resample import region_resample

logger = logging.getLogger(__name__)

DEFAULT_TILE_SIZE = 640
DEFAULT_CROP_SIZE = 112
DEFAULT_BLACK_THRESHOLD = 0.20
DEFAULT_KEEP_FRACTION = 0.5
DEFAULT_MERGE_IOU = 0.5
DEFAULT_SPLIT_RATIOS = (0.70, 0.15, 0.15)

_SPLIT_ORDER = (Split.TRAIN, Split.VAL, Split.TEST)


@dataclass(frozen=True)
class Tile:
    """A rectangular piece of a parent image with annotations renormalized to it."""

    parent: str
    origin: tuple[int, int]
    width: int
    height: int
    raster: Raster
    annotations: tuple[Annotation, ...]
    row: int
    col: int

    @property
    def name(self) -> str:
        return f"{self.parent}_r{self.row}_c{self.col}"


class TilingResult(NamedTuple):
    tiles: list[Tile]
    damaged: int


class ScreenResult(NamedTuple):
    kept: list
    excluded: list


def tile_grid(width: int, height: int, tile_size: int) -> list[tuple[int, int, int, int]]:
    """Non-overlapping grid anchored at (0,0): (x, y, w, h) rects covering the image.

    Last row/column rects are truncated at the boundary, never padded.
    """
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    if tile_size < 32:
        raise ValueError(f"tile_size must be >= 32, got {tile_size}")
    rects = []
    for y in range(0, height, tile_size):
        for x in range(0, width, tile_size):
            rects.append((x, y, min(tile_size, width - x), min(tile_size, height - y)))
    return rects


def tile_image(
    raster: Raster,
    annotations: Sequence[Annotation],
    tile_size: int = DEFAULT_TILE_SIZE,
    keep_fraction: float = DEFAULT_KEEP_FRACTION,
    parent: str = "image",
) -> TilingResult:
    """Cut the raster into a grid of tiles and reassign its annotations.

    A parent annotation lands in every tile where its visible area fraction
    (intersection / box area) reaches keep_fraction; it is clipped to the tile
    and renormalized there. Annotations below the threshold in every tile are
    counted as damaged.
    """
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    w, h = raster.width, raster.height
    rects = tile_grid(w, h, tile_size)
    cols = math.ceil(w / tile_size)
    boxes_px = [ann.box.to_pixel(w, h) for ann in annotations]
    placed = [False] * len(annotations)

    tiles = []
    for idx, (x, y, tw, th) in enumerate(rects):
        kept: list[Annotation] = []
        for i, (ann, box) in enumerate(zip(annotations, boxes_px)):
            clipped = box.clipped(x + tw, y + th, x, y)
            if clipped is None or clipped.area < keep_fraction * box.area:
                continue
            local = BBox(
                (clipped.cx - x) / tw,
                (clipped.cy - y) / th,
                clipped.w / tw,
                clipped.h / th,
                Space.NORMALIZED,
            )
            kept.append(Annotation(local, ann.class_id, ann.confidence, ann.source))
            placed[i] = True
        sub = raster.pixels[y : y + th, x : x + tw].copy()
        tiles.append(Tile(parent, (x, y), tw, th, Raster(sub), tuple(kept), idx // cols, idx % cols))
    return TilingResult(tiles, damaged=placed.count(False))


def extract_crops(
    raster: Raster,
    annotations: Sequence[Annotation],
    out_size: int = DEFAULT_CROP_SIZE,
) -> list[tuple[Raster, int]]:
    """Cut one square crop per annotation, resampled to out_size with bilinear weights.

    Requires every annotation to carry a concrete class. Box regions are
    clipped to the image first; regions that clip away entirely are skipped
    with a warning.
    """
    w, h = raster.width, raster.height
    crops: list[tuple[Raster, int]] = []
    for i, ann in enumerate(annotations):
        if ann.class_id == UNKNOWN_CLASS:
            raise ValueError(f"annotation {i} has no class; assign classes before extracting crops")
        box = ann.box.to_pixel(w, h)
        clipped = box.clipped(float(w), float(h))
        if clipped is None or clipped.w < 0.5 or clipped.h < 0.5:
            logger.warning("annotation %d clips to a zero-pixel region; skipped", i)
            continue
        pixels = region_resample(raster.pixels, clipped.x0, clipped.y0, clipped.w, clipped.h, out_size, out_size)
        crops.append((Raster(pixels), ann.class_id))
    return crops


def black_fraction(raster: Raster) -> float:
    """Fraction of pixels whose every channel is exactly 0."""
    return float((raster.pixels == 0).all(axis=2).mean())


def screen_tiles(tiles: Sequence[Tile], threshold: float = DEFAULT_BLACK_THRESHOLD) -> ScreenResult:
    """Partition tiles into (kept, excluded): excluded iff black_fraction >= threshold."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    kept, excluded = [], []
    for tile in tiles:
        (excluded if black_fraction(tile.raster) >= threshold else kept).append(tile)
    return ScreenResult(kept, excluded)


def expand_bbox(
    box: BBox,
    area_factor: float,
    bounds: tuple[float, float] | None = None,
    mode: str = "area",
) -> BBox:
    """Grow a box about its center so its area scales by area_factor.

    Each side is multiplied by sqrt(area_factor) (mode="area") or by the raw
    factor (mode="side", in which case area grows by factor squared). The
    pre-clip factor is exact; clipping against `bounds` afterwards may reduce
    the realized area. Normalized boxes use bounds (1, 1) unless overridden.
    """
    if area_factor < 1.0:
        raise ValueError(f"expansion factor must be >= 1, got {area_factor}")
    if mode == "area":
        side = math.sqrt(area_factor)
    elif mode == "side":
        side = area_factor
    else:
        raise ValueError(f"mode must be 'area' or 'side', got {mode!r}")
    grown = BBox(box.cx, box.cy, box.w * side, box.h * side, box.space)
    if bounds is None and box.space is Space.NORMALIZED:
        bounds = (1.0, 1.0)
    if bounds is None:
        return grown
    clipped = grown.clipped(bounds[0], bounds[1])
    if clipped is None:
        raise ValueError("box lies entirely outside the given bounds")
    return clipped


def assign_classes_from_image(record: ImageRecord, class_names: Sequence[str]) -> ImageRecord:
    """Give every unknown-class annotation the record's image-level species tag.

    Slides hold a single species, so the class-agnostic auto labels inherit the
    record tag; manual labels are untouched.
    """
    has_unknown = any(a.class_id == UNKNOWN_CLASS for a in record.annotations)
    if not has_unknown:
        return record
    if record.species_tag is None:
        raise ValueError(f"record {record.image_path} has unknown-class annotations but no species_tag")
    try:
        tag_id = list(class_names).index(record.species_tag)
    except ValueError:
        raise ValueError(f"species_tag {record.species_tag!r} not in class_names {list(class_names)}") from None
    updated = tuple(
        Annotation(a.box, tag_id, a.confidence, a.source) if a.class_id == UNKNOWN_CLASS else a
        for a in record.annotations
    )
    return record.with_annotations(updated)


def _iou(a: BBox, b: BBox) -> float:
    x0, y0 = max(a.x0, b.x0), max(a.y0, b.y0)
    x1, y1 = min(a.x1, b.x1), min(a.y1, b.y1)
    inter = max(0.0, x1 - x0) * max(0.0, y1 - y0)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def merge_labels(
    manual: Sequence[Annotation],
    auto: Sequence[Annotation],
    iou_threshold: float = DEFAULT_MERGE_IOU,
) -> list[Annotation]:
    """Combine manual and auto annotations, suppressing duplicate auto boxes.

    All manual annotations survive. Auto annotations are visited in descending
    confidence (ties keep list order) and dropped when they overlap an accepted
    annotation at or above the IoU threshold. Output is manual first, then the
    accepted autos in acceptance order.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    spaces = {a.box.space for a in manual} | {a.box.space for a in auto}
    if len(spaces) > 1:
        raise ValueError("manual and auto annotations must share one coordinate space")

    accepted: list[Annotation] = list(manual)
    ordered = sorted(enumerate(auto), key=lambda pair: -(pair[1].confidence or 0.0))
    out_auto: list[Annotation] = []
    for _, cand in ordered:
        if any(_iou(cand.box, kept.box) >= iou_threshold for kept in accepted):
            continue
        accepted.append(cand)
        out_auto.append(cand)
    return list(manual) + out_auto


@dataclass(frozen=True)
class SplitItem:
    """A splittable unit (image, tile, or crop) with its per-class instance counts."""

    item_id: str
    histogram: Mapping[str, int]


@dataclass(frozen=True)
class SplitAssignment:
    assignment: Mapping[str, Split]
    ratios: tuple[float, float, float]
    seed: int

    def sizes(self) -> dict[Split, int]:
        out = {s: 0 for s in _SPLIT_ORDER}
        for split in self.assignment.values():
            out[split] += 1
        return out


def split_dataset(
    items: Sequence[SplitItem],
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    """Greedy stratified assignment of items to train/val/test.

    Items are shuffled by the seed, then each goes to the split with the
    largest remaining per-class instance deficit (target minus current count,
    weighted by the item's own histogram). Deterministic for a given seed; ties
    break in train/val/test order.
    """
    if not items:
        raise ValueError("cannot split an empty item list")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    ids = [it.item_id for it in items]
    if len(set(ids)) != len(ids):
        raise ValueError("item identifiers must be unique")

    class_totals: dict[str, int] = {}
    class_items: dict[str, int] = {}
    for it in items:
        for cname, count in it.histogram.items():
            class_totals[cname] = class_totals.get(cname, 0) + count
            class_items[cname] = class_items.get(cname, 0) + (1 if count > 0 else 0)
    for cname, n_items in class_items.items():
        if n_items < len(_SPLIT_ORDER):
            warnings.warn(
                f"class {cname!r} appears in only {n_items} item(s); "
                f"cannot stratify across {len(_SPLIT_ORDER)} splits, assigning best-effort",
                stacklevel=2,
            )

    targets = {
        cname: {split: ratio * total for split, ratio in zip(_SPLIT_ORDER, ratios)}
        for cname, total in class_totals.items()
    }
    current = {cname: {split: 0.0 for split in _SPLIT_ORDER} for cname in class_totals}

    order = list(range(len(items)))
    random.Random(seed).shuffle(order)

    assignment: dict[str, Split] = {}
    for idx in order:
        item = items[idx]
        best_split = _SPLIT_ORDER[0]
        best_score = -math.inf
        for split in _SPLIT_ORDER:
            score = sum(
                count * (targets[cname][split] - current[cname][split])
                for cname, count in item.histogram.items()
                if count > 0
            )
            if score > best_score:
                best_score, best_split = score, split
        assignment[item.item_id] = best_split
        for cname, count in item.histogram.items():
            current[cname][best_split] += count
    return SplitAssignment(assignment, tuple(ratios), seed)


@dataclass(frozen=True)
class InstanceCounts:
    """Instance tallies keyed by (class name, source, split); split None = unassigned."""

    classes: tuple[str, ...]
    entries: Mapping[tuple[str, Source, Split | None], int] = field(default_factory=dict)

    def total(self, class_name: str | None = None, source: Source | None = None, split=...) -> int:
        """Filtered sum; split=... matches any split (including unassigned)."""
        tally = 0
        for (cname, src, spl), n in self.entries.items():
            if class_name is not None and cname != class_name:
                continue
            if source is not None and src != source:
                continue
            if split is not ... and spl != split:
                continue
            tally += n
        return tally

    def by_class(self, source: Source) -> dict[str, int]:
        return {c: self.total(class_name=c, source=source) for c in self.classes}

    def by_split(self, source: Source) -> dict[Split, int]:
        return {s: self.total(source=source, split=s) for s in _SPLIT_ORDER}

    def unassigned(self, source: Source | None = None) -> int:
        return self.total(source=source, split=None)


def count_instances(manifest: DatasetManifest) -> InstanceCounts:
    """Exact annotation counts by class, source, and split across the manifest.

    Requires classes to be assigned already (no unknown-class annotations).
    """
    entries: dict[tuple[str, Source, Split | None], int] = {}
    for rec in manifest.records:
        split = manifest.split_of(rec.image_path)
        for ann in rec.annotations:
            if ann.class_id == UNKNOWN_CLASS:
                raise ValueError(
                    f"record {rec.image_path} holds an unknown-class annotation; "
                    "run assign_classes_from_image first"
                )
            cname = manifest.class_names[ann.class_id]
            key = (cname, ann.source, split)
            entries[key] = entries.get(key, 0) + 1
    return InstanceCounts(manifest.class_names, entries)


@dataclass(frozen=True)
class ClassWeightTable:
    """Inverse-frequency class weights: weight_c * count_c is constant across classes."""

    weights: Mapping[str, float]

    def as_vector(self, class_names: Sequence[str]) -> np.ndarray:
        return np.array([self.weights[c] for c in class_names], dtype=np.float64)


def class_weights(counts: Mapping[str, int]) -> ClassWeightTable:
    """weight_c = N_total / (K * n_c), so each class contributes N/K weighted instances."""
    if not counts:
        raise ValueError("counts must be non-empty")
    for cname, n in counts.items():
        if n <= 0:
            raise ValueError(f"class {cname!r} has count {n}; cannot weight an absent class")
    total = sum(counts.values())
    k = len(counts)
    return ClassWeightTable({cname: total / (k * n) for cname, n in counts.items()})
