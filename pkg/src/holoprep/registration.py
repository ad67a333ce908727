"""Point-based similarity registration between imaging modalities.

Estimates the scale/rotation/translation mapping annotated points in a
holographic source image onto their optical counterparts, and applies it to
points, boxes, and whole rasters. The closed-form least-squares estimate runs
in six steps: centroids, demeaning, norm (scale) computation, normalization,
SVD for the optimal proper rotation, and assembly of the final transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BBox, Raster, SimilarityTransform, Space
from .resample import BILINEAR, affine_sample

DEFAULT_MAX_WARP_PIXELS = 400_000_000

_DEGENERATE_RATIO = 1e-9


@dataclass(frozen=True)
class PointPair:
    """One source-image point and its corresponding destination-image point."""

    src: tuple[float, float]
    dst: tuple[float, float]

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (*self.src, *self.dst)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class RegistrationReport:
    """Estimated transform plus fit quality.

    `degenerate` flags near-collinear source configurations: the smaller
    singular value of the demeaned covariance fell below 1e-9 times the larger.
    The transform is still usable (two-point registration is legitimate).
    """

    transform: SimilarityTransform
    rms_residual: float
    n_points: int
    degenerate: bool = False


def _as_point_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, np.ndarray):
        arr = np.asarray(pairs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError("pair array must have shape (n, 4): x_src,y_src,x_dst,y_dst")
        return arr[:, :2], arr[:, 2:]
    src = np.array([p.src for p in pairs], dtype=np.float64).reshape(-1, 2)
    dst = np.array([p.dst for p in pairs], dtype=np.float64).reshape(-1, 2)
    return src, dst


def estimate_similarity(pairs) -> RegistrationReport:
    """Least-squares similarity estimate from point correspondences.

    Accepts a sequence of PointPair or an (n, 4) array. The returned transform
    minimizes the sum of squared errors ||c R src + t - dst||^2 over isotropic
    scale, proper rotation, and translation. Deterministic.
    """
    src, dst = _as_point_arrays(pairs)
    n = src.shape[0]
    if n < 2:
        raise ValueError(f"registration needs at least 2 point pairs, got {n}")

    src_centroid = src.mean(axis=0)
    dst_centroid = dst.mean(axis=0)
    src_d = src - src_centroid
    dst_d = dst - dst_centroid

    src_var = float((src_d**2).sum(axis=1).mean())
    if src_var == 0.0:
        raise ValueError("all source points coincide; scale is undefined")

    cov = dst_d.T @ src_d / n
    u, sv, vt = np.linalg.svd(cov)
    sign = np.eye(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[1, 1] = -1.0
    rotation = u @ sign @ vt
    scale = float(np.trace(np.diag(sv) @ sign)) / src_var
    translation = dst_centroid - scale * rotation @ src_centroid

    degenerate = bool(sv[1] < _DEGENERATE_RATIO * sv[0])
    transform = SimilarityTransform(scale, rotation, translation)
    mapped = apply_to_point(transform, src)
    rms = float(np.sqrt(((mapped - dst) ** 2).sum(axis=1).mean()))
    return RegistrationReport(transform, rms, n, degenerate)


def apply_to_point(t: SimilarityTransform, p) -> np.ndarray:
    """Map a point (x, y) or an (n, 2) array through the transform."""
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    pts = arr.reshape(-1, 2)
    out = t.scale * pts @ t.rotation.T + t.translation
    return out[0] if single else out


def invert(t: SimilarityTransform) -> SimilarityTransform:
    """Exact group inverse: apply(invert(t), apply(t, p)) == p."""
    inv_scale = 1.0 / t.scale
    inv_rot = t.rotation.T.copy()
    inv_tr = -inv_scale * inv_rot @ t.translation
    return SimilarityTransform(inv_scale, inv_rot, inv_tr)


def map_bbox(t: SimilarityTransform, box: BBox) -> BBox:
    """Transform a pixel-space box: map the 4 corners, return their axis-aligned hull."""
    if box.space is not Space.PIXEL:
        raise ValueError("map_bbox expects a pixel-space box")
    corners = np.array(
        [[box.x0, box.y0], [box.x1, box.y0], [box.x0, box.y1], [box.x1, box.y1]], dtype=np.float64
    )
    mapped = apply_to_point(t, corners)
    x0, y0 = mapped.min(axis=0)
    x1, y1 = mapped.max(axis=0)
    return BBox.from_corners(float(x0), float(y0), float(x1), float(y1), Space.PIXEL)


def warp_image(
    src: Raster,
    t: SimilarityTransform,
    out_width: int,
    out_height: int,
    interpolation: str = BILINEAR,
    max_pixels: int = DEFAULT_MAX_WARP_PIXELS,
) -> Raster:
    """Resample the source raster into a destination frame of the given size.

    Output pixel (x, y) samples the source at invert(t) @ (x, y); samples
    outside the source produce pure black (0 in every channel), which is what
    the downstream black-area screening keys on. Refuses outputs larger than
    `max_pixels`.
    """
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be >= 1")
    if out_width * out_height > max_pixels:
        raise ValueError(
            f"refusing to warp: {out_width}x{out_height} = {out_width * out_height} pixels "
            f"exceeds the budget of {max_pixels}; raise max_pixels to override"
        )
    inv = invert(t)
    matrix = inv.scale * inv.rotation
    out = affine_sample(src.pixels, matrix, inv.translation, out_width, out_height, interpolation)
    return Raster(out)
