"""Seeded, reproducible augmentation of rasters and their annotations.

Two stock policies mirror the training recipes for detection (rotation up to
45 degrees, vertical flipping at 50%, mixup at 10%) and classification
(rotation up to 40 degrees, horizontal flipping at 50%, translation up to 20%,
resized cropping keeping 80-100% of content, and intensity/color jitter).

Randomness is counter-based (Philox) keyed by (seed, draw_index), so the same
draw produces byte-identical output no matter how work is scheduled across
workers. Transform order is fixed: rotate, flip, translate, resized crop,
jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .model import Annotation, BBox, Raster, Space
from .resample import affine_sample, region_resample

# Boxes travel through the geometric steps as plain (x0, y0, x1, y1) corner
# tuples in normalized units; they may leave [0,1] mid-pipeline and are only
# clipped and re-validated at the end.
Corners = tuple[float, float, float, float]

_MIXUP_STREAM = 1
_MIXUP_LAMBDA_RANGE = (0.3, 0.7)


@dataclass(frozen=True)
class AugmentationPolicy:
    """Every augmentation knob plus the stream seed.

    Ranges of zero (and crop_keep_range (1, 1)) disable their transform; the
    corresponding random draws still happen so the draw layout stays stable
    across policies.
    """

    max_rotation: float = 0.0
    hflip_p: float = 0.0
    vflip_p: float = 0.0
    translate_max: float = 0.0
    crop_keep_range: tuple[float, float] = (1.0, 1.0)
    brightness: float = 0.0
    contrast: float = 0.0
    saturation: float = 0.0
    hue: float = 0.0
    mixup_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "crop_keep_range", tuple(self.crop_keep_range))
        for name in ("hflip_p", "vflip_p", "mixup_p"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {p}")
        lo, hi = self.crop_keep_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError(f"crop_keep_range must satisfy 0 < lo <= hi <= 1, got {self.crop_keep_range}")
        if self.max_rotation < 0 or self.translate_max < 0:
            raise ValueError("max_rotation and translate_max must be non-negative")
        for name in ("brightness", "contrast", "saturation", "hue"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} jitter must be non-negative")

    def with_seed(self, seed: int) -> "AugmentationPolicy":
        return replace(self, seed=seed)


def detection_policy_default(seed: int = 0) -> AugmentationPolicy:
    """Detection-training augmentation: rotate to 45 deg, vflip 50%, mixup 10%."""
    return AugmentationPolicy(max_rotation=45.0, vflip_p=0.5, mixup_p=0.10, seed=seed)


def classification_policy_default(seed: int = 0) -> AugmentationPolicy:
    """Classification-training augmentation: rotate to 40 deg, hflip 50%,
    translate 20%, resized crop keeping 80-100%, jitter b/c/s +-20%, hue +-10%."""
    return AugmentationPolicy(
        max_rotation=40.0,
        hflip_p=0.5,
        translate_max=0.20,
        crop_keep_range=(0.80, 1.00),
        brightness=0.20,
        contrast=0.20,
        saturation=0.20,
        hue=0.10,
        seed=seed,
    )


class AugmentResult(NamedTuple):
    raster: Raster
    annotations: tuple[Annotation, ...]
    dropped: int


def policy_rng(seed: int, draw_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one (seed, draw_index) pair on an independent stream."""
    key = np.array([np.uint64(seed % 2**64), np.uint64(draw_index % 2**64)])
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class _Draws(NamedTuple):
    angle_deg: float
    hflip: bool
    vflip: bool
    dx_frac: float
    dy_frac: float
    keep: float
    crop_ox: float
    crop_oy: float
    brightness: float
    contrast: float
    saturation: float
    hue_shift: float


def _draw_all(policy: AugmentationPolicy, draw_index: int) -> _Draws:
    # Fixed draw order; every value is drawn even when its transform is off.
    rng = policy_rng(policy.seed, draw_index)
    angle = rng.uniform(-policy.max_rotation, policy.max_rotation)
    hflip = rng.random() < policy.hflip_p
    vflip = rng.random() < policy.vflip_p
    dx = rng.uniform(-policy.translate_max, policy.translate_max)
    dy = rng.uniform(-policy.translate_max, policy.translate_max)
    keep = rng.uniform(policy.crop_keep_range[0], policy.crop_keep_range[1])
    ox = rng.random()
    oy = rng.random()
    b = rng.uniform(1 - policy.brightness, 1 + policy.brightness)
    c = rng.uniform(1 - policy.contrast, 1 + policy.contrast)
    s = rng.uniform(1 - policy.saturation, 1 + policy.saturation)
    hshift = rng.uniform(-policy.hue, policy.hue)
    return _Draws(angle, hflip, vflip, dx, dy, keep, ox, oy, b, c, s, hshift)


def _rotate(pixels: np.ndarray, boxes: list[Corners], angle_deg: float):
    h, w = pixels.shape[0], pixels.shape[1]
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    ctr = np.array([w / 2.0, h / 2.0])
    # Pixels pull through the inverse rotation; sample positions are index
    # coordinates, so the continuous rotation center lands at ctr - 0.5.
    inv = np.array([[cos_t, sin_t], [-sin_t, cos_t]])
    offset = (ctr - 0.5) - inv @ (ctr - 0.5)
    out = affine_sample(pixels, inv, offset, w, h)

    fwd = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    new_boxes: list[Corners] = []
    for x0, y0, x1, y1 in boxes:
        corners = np.array(
            [[x0 * w, y0 * h], [x1 * w, y0 * h], [x0 * w, y1 * h], [x1 * w, y1 * h]]
        )
        rotated = (corners - ctr) @ fwd.T + ctr
        lo = rotated.min(axis=0)
        hi = rotated.max(axis=0)
        new_boxes.append((lo[0] / w, lo[1] / h, hi[0] / w, hi[1] / h))
    return out, new_boxes


def _translate(pixels: np.ndarray, boxes: list[Corners], dx_frac: float, dy_frac: float):
    h, w = pixels.shape[0], pixels.shape[1]
    sx = round(dx_frac * w)
    sy = round(dy_frac * h)
    if sx == 0 and sy == 0:
        return pixels, boxes
    out = np.zeros_like(pixels)
    src_x0, src_x1 = max(0, -sx), min(w, w - sx)
    src_y0, src_y1 = max(0, -sy), min(h, h - sy)
    if src_x1 > src_x0 and src_y1 > src_y0:
        out[src_y0 + sy : src_y1 + sy, src_x0 + sx : src_x1 + sx] = pixels[src_y0:src_y1, src_x0:src_x1]
    fx, fy = sx / w, sy / h
    return out, [(x0 + fx, y0 + fy, x1 + fx, y1 + fy) for x0, y0, x1, y1 in boxes]


def _resized_crop(pixels: np.ndarray, boxes: list[Corners], keep: float, ox: float, oy: float):
    h, w = pixels.shape[0], pixels.shape[1]
    side = math.sqrt(keep)
    cw = min(w, max(1, round(w * side)))
    ch = min(h, max(1, round(h * side)))
    if cw == w and ch == h:
        return pixels, boxes
    cx0 = round(ox * (w - cw))
    cy0 = round(oy * (h - ch))
    out = region_resample(pixels, float(cx0), float(cy0), float(cw), float(ch), w, h)
    new_boxes = [
        ((x0 * w - cx0) / cw, (y0 * h - cy0) / ch, (x1 * w - cx0) / cw, (y1 * h - cy0) / ch)
        for x0, y0, x1, y1 in boxes
    ]
    return out, new_boxes


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    spread = maxc - minc
    s = np.where(maxc > 0, spread / np.maximum(maxc, 1e-12), 0.0)
    safe = np.maximum(spread, 1e-12)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    hue = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    hue = np.where(spread == 0, 0.0, (hue / 6.0) % 1.0)
    return np.stack([hue, s, maxc], axis=-1)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    sector = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    out = np.empty_like(hsv)
    for k, (a, b, c) in enumerate([(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]):
        mask = sector == k
        out[mask, 0] = a[mask]
        out[mask, 1] = b[mask]
        out[mask, 2] = c[mask]
    return out


def _jitter(pixels: np.ndarray, d: _Draws) -> np.ndarray:
    channels = pixels.shape[2]
    img = pixels.astype(np.float32)
    if d.brightness != 1.0:
        img = img * d.brightness
    if d.contrast != 1.0:
        if channels == 3:
            grey_mean = float((img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114).mean())
        else:
            grey_mean = float(img.mean())
        img = grey_mean + (img - grey_mean) * d.contrast
    if channels == 3 and d.saturation != 1.0:
        grey = img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
        img = grey[..., np.newaxis] + (img - grey[..., np.newaxis]) * d.saturation
    img = np.clip(img, 0.0, 255.0)
    if channels == 3 and d.hue_shift != 0.0:
        hsv = _rgb_to_hsv(img.astype(np.float64) / 255.0)
        hsv[..., 0] = (hsv[..., 0] + d.hue_shift) % 1.0
        img = (_hsv_to_rgb(hsv) * 255.0).astype(np.float32)
    return np.rint(np.clip(img, 0.0, 255.0)).astype(np.uint8)


def _clip_and_collect(boxes: list[Corners], anns: Sequence[Annotation]) -> tuple[list[Annotation], int]:
    kept: list[Annotation] = []
    dropped = 0
    for (x0, y0, x1, y1), ann in zip(boxes, anns):
        x0, y0 = max(0.0, x0), max(0.0, y0)
        x1, y1 = min(1.0, x1), min(1.0, y1)
        if x1 - x0 <= 1e-9 or y1 - y0 <= 1e-9:
            dropped += 1
            continue
        kept.append(
            Annotation(
                BBox.from_corners(x0, y0, x1, y1, Space.NORMALIZED),
                ann.class_id,
                ann.confidence,
                ann.source,
            )
        )
    return kept, dropped


def augment(
    raster: Raster,
    annotations: Sequence[Annotation],
    policy: AugmentationPolicy,
    draw_index: int,
) -> AugmentResult:
    """Apply one seeded draw of the policy to a raster and its annotations.

    Geometric transforms run in the fixed order rotate -> flip -> translate ->
    resized crop, with boxes transformed alongside; intensity jitter runs last
    (greyscale rasters skip saturation and hue). Rotation and translation fill
    with pure black. Output dimensions equal input dimensions, and the result
    is fully deterministic given (policy.seed, draw_index). Annotations that
    vanish under cropping are dropped and counted in the result.
    """
    for i, ann in enumerate(annotations):
        if ann.box.space is not Space.NORMALIZED:
            raise ValueError(f"annotation {i} must be normalized")
    d = _draw_all(policy, draw_index)
    pixels = raster.pixels
    boxes: list[Corners] = [(a.box.x0, a.box.y0, a.box.x1, a.box.y1) for a in annotations]
    moved = False

    if d.angle_deg != 0.0:
        pixels, boxes = _rotate(pixels, boxes, d.angle_deg)
        moved = True
    if d.hflip:
        pixels = pixels[:, ::-1]
        boxes = [(1 - x1, y0, 1 - x0, y1) for x0, y0, x1, y1 in boxes]
        moved = True
    if d.vflip:
        pixels = pixels[::-1, :]
        boxes = [(x0, 1 - y1, x1, 1 - y0) for x0, y0, x1, y1 in boxes]
        moved = True
    if d.dx_frac != 0.0 or d.dy_frac != 0.0:
        pixels, boxes = _translate(pixels, boxes, d.dx_frac, d.dy_frac)
        moved = True
    if d.keep < 1.0:
        pixels, boxes = _resized_crop(pixels, boxes, d.keep, d.crop_ox, d.crop_oy)
        moved = True
    if moved:
        kept, dropped = _clip_and_collect(boxes, annotations)
    else:
        kept, dropped = list(annotations), 0
    if d.brightness != 1.0 or d.contrast != 1.0 or d.saturation != 1.0 or d.hue_shift != 0.0:
        pixels = _jitter(pixels, d)
    return AugmentResult(Raster(np.ascontiguousarray(pixels)), tuple(kept), dropped)


def mixup(a: Raster, b: Raster, lam: float) -> Raster:
    """Blend two rasters: round(lam * a + (1 - lam) * b), exact at lam 0 and 1."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must be in [0,1], got {lam}")
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"mixup inputs must match in size and channels: {a.pixels.shape} vs {b.pixels.shape}")
    if lam == 1.0:
        return a
    if lam == 0.0:
        return b
    blend = lam * a.pixels.astype(np.float64) + (1.0 - lam) * b.pixels.astype(np.float64)
    return Raster(np.rint(blend).astype(np.uint8))


def maybe_mixup(policy: AugmentationPolicy, draw_index: int, a: Raster, b: Raster) -> tuple[Raster, float | None]:
    """Trigger mixup at the policy probability, drawing lambda from uniform(0.3, 0.7).

    Uses a dedicated random stream so it never perturbs augment() draws.
    Returns (raster, lambda) with lambda None when not triggered.
    """
    rng = policy_rng(policy.seed, draw_index, stream=_MIXUP_STREAM)
    triggered = rng.random() < policy.mixup_p
    lam = float(rng.uniform(*_MIXUP_LAMBDA_RANGE))
    if not triggered:
        return a, None
    return mixup(a, b, lam), lam
