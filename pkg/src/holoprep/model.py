"""Shared domain types: rasters, boxes, annotations, records, manifests, transforms.

Everything here is immutable after construction so instances can be shared
freely across worker threads. Pixel data is stored as read-only uint8 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

UNKNOWN_CLASS = -1

_ORTHO_TOL = 1e-9


class Space(str, Enum):
    """Coordinate space of a bounding box."""

    NORMALIZED = "NORMALIZED"
    PIXEL = "PIXEL"


class Source(str, Enum):
    """Provenance of an annotation: drawn by a human or emitted by the auto-labeler."""

    MANUAL = "MANUAL"
    AUTO = "AUTO"


class Modality(str, Enum):
    OPTICAL = "OPTICAL"
    HOLOGRAPHIC = "HOLOGRAPHIC"


class Split(str, Enum):
    TRAIN = "TRAIN"
    VAL = "VAL"
    TEST = "TEST"


@dataclass(frozen=True, eq=False)
class Raster:
    """8-bit image: greyscale (1 channel) or RGB (3 channels).

    Pixels are stored as a read-only (height, width, channels) uint8 array.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.ndim != 3:
            raise ValueError(f"raster array must be 2-D or 3-D, got {px.ndim}-D")
        if px.dtype != np.uint8:
            raise ValueError(f"raster samples must be uint8, got {px.dtype}")
        if px.shape[2] not in (1, 3):
            raise ValueError(f"raster must have 1 or 3 channels, got {px.shape[2]}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"raster dimensions must be >= 1, got {px.shape[1]}x{px.shape[0]}")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def zeros(cls, width: int, height: int, channels: int = 1) -> "Raster":
        return cls(np.zeros((height, width, channels), dtype=np.uint8))

    def same_pixels(self, other: "Raster") -> bool:
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box stored as center + extents, with an explicit coordinate space."""

    cx: float
    cy: float
    w: float
    h: float
    space: Space = Space.NORMALIZED

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")
        if self.space is Space.NORMALIZED and not (
            -_ORTHO_TOL <= self.cx <= 1 + _ORTHO_TOL and -_ORTHO_TOL <= self.cy <= 1 + _ORTHO_TOL
        ):
            raise ValueError(f"normalized box center out of [0,1]: ({self.cx}, {self.cy})")

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    @classmethod
    def from_corners(cls, x0: float, y0: float, x1: float, y1: float, space: Space) -> "BBox":
        return cls((x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0, space)

    def to_pixel(self, width: int, height: int) -> "BBox":
        if self.space is Space.PIXEL:
            return self
        return BBox(self.cx * width, self.cy * height, self.w * width, self.h * height, Space.PIXEL)

    def to_normalized(self, width: int, height: int) -> "BBox":
        if self.space is Space.NORMALIZED:
            return self
        return BBox(self.cx / width, self.cy / height, self.w / width, self.h / height, Space.NORMALIZED)

    def clipped(self, x_max: float, y_max: float, x_min: float = 0.0, y_min: float = 0.0) -> "BBox | None":
        """Intersect with the rectangle [x_min, x_max] x [y_min, y_max]; None when empty."""
        x0, y0 = max(self.x0, x_min), max(self.y0, y_min)
        x1, y1 = min(self.x1, x_max), min(self.y1, y_max)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            return None
        return BBox.from_corners(x0, y0, x1, y1, self.space)


@dataclass(frozen=True)
class Annotation:
    """A bounding box plus class, optional confidence, and provenance.

    Auto labels are class-agnostic: class_id may be UNKNOWN_CLASS (-1) only when
    source is AUTO. Manual labels always carry a concrete class.
    """

    box: BBox
    class_id: int = UNKNOWN_CLASS
    confidence: float | None = None
    source: Source = Source.MANUAL

    def __post_init__(self):
        if self.source is Source.MANUAL and self.class_id < 0:
            raise ValueError("manual annotations require a concrete class_id")
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")


@dataclass(frozen=True)
class ImageRecord:
    """One slide image: path, modality, image-level species tag, annotations.

    Each slide holds a single species, so the record-level tag is the class of
    every class-agnostic auto label on it. `aligned` marks rasters already
    warped into the optical coordinate frame.
    """

    image_path: str
    modality: Modality
    species_tag: str | None = None
    label_path: str | None = None
    aligned: bool = False
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "annotations", tuple(self.annotations))
        for i, ann in enumerate(self.annotations):
            b = ann.box
            if b.space is Space.NORMALIZED and not (
                b.x0 >= -_ORTHO_TOL and b.y0 >= -_ORTHO_TOL and b.x1 <= 1 + _ORTHO_TOL and b.y1 <= 1 + _ORTHO_TOL
            ):
                raise ValueError(f"annotation {i} of {self.image_path} extends outside [0,1]^2")

    def with_annotations(self, annotations: Sequence[Annotation]) -> "ImageRecord":
        return ImageRecord(
            self.image_path, self.modality, self.species_tag, self.label_path, self.aligned, tuple(annotations)
        )


@dataclass(frozen=True)
class DatasetManifest:
    """Record list plus the ordered class vocabulary and optional split map."""

    records: tuple[ImageRecord, ...]
    class_names: tuple[str, ...]
    splits: Mapping[str, Split] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "splits", dict(self.splits))
        if not self.class_names:
            raise ValueError("class_names must be non-empty")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names must be unique")
        seen = set()
        for rec in self.records:
            if rec.image_path in seen:
                raise ValueError(f"duplicate record path: {rec.image_path}")
            seen.add(rec.image_path)

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ValueError(f"unknown class name: {name!r} (known: {list(self.class_names)})") from None

    def split_of(self, item_id: str) -> Split | None:
        return self.splits.get(item_id)


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """Plane mapping p -> scale * rotation @ p + translation.

    The rotation is a proper rotation (orthonormal, det +1); scale is isotropic
    and positive; translation is in destination pixels.
    """

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64)
        tr = np.array(self.translation, dtype=np.float64).reshape(2)
        if rot.shape != (2, 2):
            raise ValueError(f"rotation must be 2x2, got {rot.shape}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if np.abs(rot.T @ rot - np.eye(2)).max() > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(rot) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must be proper (det +1); reflections are rejected")
        rot.flags.writeable = False
        tr.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, np.eye(2), np.zeros(2))

    @classmethod
    def from_params(cls, scale: float, angle_rad: float, tx: float, ty: float) -> "SimilarityTransform":
        c, s = np.cos(angle_rad), np.sin(angle_rad)
        return cls(scale, np.array([[c, -s], [s, c]]), np.array([tx, ty], dtype=np.float64))

    @property
    def angle_rad(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))

    def params(self) -> tuple[float, float, float, float]:
        """(scale, angle_rad, tx, ty)."""
        return (self.scale, self.angle_rad, float(self.translation[0]), float(self.translation[1]))
