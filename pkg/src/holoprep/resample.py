"""Inverse-mapped affine sampling of 8-bit rasters.

The sampler works in strips so gigapixel outputs never materialize full
float coordinate grids. Out-of-range samples are exact zero in every channel;
that is what makes the downstream black-area screening well defined.
"""

from __future__ import annotations

import numpy as np

NEAREST = "nearest"
BILINEAR = "bilinear"

# ~4M output pixels per strip keeps the temporary float arrays around 100 MB.
_STRIP_PIXELS = 4_000_000


def _check_mode(interpolation: str) -> str:
    mode = interpolation.lower()
    if mode not in (NEAREST, BILINEAR):
        raise ValueError(f"interpolation must be 'nearest' or 'bilinear', got {interpolation!r}")
    return mode


def affine_sample(
    pixels: np.ndarray,
    matrix: np.ndarray,
    offset: np.ndarray,
    out_width: int,
    out_height: int,
    interpolation: str = BILINEAR,
) -> np.ndarray:
    """Sample `pixels` at source positions matrix @ (x, y) + offset per output pixel.

    Positions are in source index coordinates; anything outside
    [0, w-1] x [0, h-1] fills with 0. Nearest rounding is half-down so an
    exact k-times upsample replicates each source pixel into a k x k block.
    """
    mode = _check_mode(interpolation)
    h, w = pixels.shape[0], pixels.shape[1]
    channels = pixels.shape[2]
    out = np.zeros((out_height, out_width, channels), dtype=np.uint8)
    a00, a01 = float(matrix[0, 0]), float(matrix[0, 1])
    a10, a11 = float(matrix[1, 0]), float(matrix[1, 1])
    b0, b1 = float(offset[0]), float(offset[1])

    xs = np.arange(out_width, dtype=np.float64)
    strip = max(1, _STRIP_PIXELS // max(out_width, 1))
    for row0 in range(0, out_height, strip):
        row1 = min(row0 + strip, out_height)
        ys = np.arange(row0, row1, dtype=np.float64)
        sx = a00 * xs[np.newaxis, :] + a01 * ys[:, np.newaxis] + b0
        sy = a10 * xs[np.newaxis, :] + a11 * ys[:, np.newaxis] + b1
        if mode == NEAREST:
            # Here validity is judged on the rounded index, so a clean k-times
            # upsample covers the whole output instead of losing a border.
            xi = np.ceil(sx - 0.5).astype(np.intp)
            yi = np.ceil(sy - 0.5).astype(np.intp)
            valid = (xi >= 0) & (xi <= w - 1) & (yi >= 0) & (yi <= h - 1)
            np.clip(xi, 0, w - 1, out=xi)
            np.clip(yi, 0, h - 1, out=yi)
            block = pixels[yi, xi]
            block[~valid] = 0
        else:
            valid = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
            x0 = np.clip(np.floor(sx), 0, max(w - 2, 0)).astype(np.intp)
            y0 = np.clip(np.floor(sy), 0, max(h - 2, 0)).astype(np.intp)
            fx = (sx - x0).astype(np.float32)[..., np.newaxis]
            fy = (sy - y0).astype(np.float32)[..., np.newaxis]
            np.clip(fx, 0.0, 1.0, out=fx)
            np.clip(fy, 0.0, 1.0, out=fy)
            x1 = np.minimum(x0 + 1, w - 1)
            y1 = np.minimum(y0 + 1, h - 1)
            p00 = pixels[y0, x0].astype(np.float32)
            p01 = pixels[y0, x1].astype(np.float32)
            p10 = pixels[y1, x0].astype(np.float32)
            p11 = pixels[y1, x1].astype(np.float32)
            top = p00 + (p01 - p00) * fx
            bot = p10 + (p11 - p10) * fx
            block = np.rint(top + (bot - top) * fy).astype(np.uint8)
            block[~valid] = 0
        out[row0:row1] = block
    return out


def resize_bilinear(pixels: np.ndarray, out_width: int, out_height: int) -> np.ndarray:
    """Resize with the half-pixel-center convention, clamping at the edges."""
    h, w = pixels.shape[0], pixels.shape[1]
    return region_resample(pixels, 0.0, 0.0, float(w), float(h), out_width, out_height)


def region_resample(
    pixels: np.ndarray,
    x0: float,
    y0: float,
    region_w: float,
    region_h: float,
    out_width: int,
    out_height: int,
) -> np.ndarray:
    """Resample a continuous-coordinate region of the image to a fixed output size.

    Output pixel centers map uniformly across the region (half-pixel
    convention); samples are bilinear with edge clamping, so regions already
    clipped to the image never introduce fill.
    """
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be >= 1")
    if region_w <= 0 or region_h <= 0:
        raise ValueError("region extents must be positive")
    h, w = pixels.shape[0], pixels.shape[1]
    sx = x0 + (np.arange(out_width, dtype=np.float64) + 0.5) * (region_w / out_width) - 0.5
    sy = y0 + (np.arange(out_height, dtype=np.float64) + 0.5) * (region_h / out_height) - 0.5
    np.clip(sx, 0, w - 1, out=sx)
    np.clip(sy, 0, h - 1, out=sy)
    x_lo = np.floor(sx).astype(np.intp)
    y_lo = np.floor(sy).astype(np.intp)
    np.clip(x_lo, 0, max(w - 2, 0), out=x_lo)
    np.clip(y_lo, 0, max(h - 2, 0), out=y_lo)
    fx = (sx - x_lo).astype(np.float32)[np.newaxis, :, np.newaxis]
    fy = (sy - y_lo).astype(np.float32)[:, np.newaxis, np.newaxis]
    x_hi = np.minimum(x_lo + 1, w - 1)
    y_hi = np.minimum(y_lo + 1, h - 1)
    p00 = pixels[np.ix_(y_lo, x_lo)].astype(np.float32)
    p01 = pixels[np.ix_(y_lo, x_hi)].astype(np.float32)
    p10 = pixels[np.ix_(y_hi, x_lo)].astype(np.float32)
    p11 = pixels[np.ix_(y_hi, x_hi)].astype(np.float32)
    top = p00 + (p01 - p00) * fx
    bot = p10 + (p11 - p10) * fx
    return np.rint(top + (bot - top) * fy).astype(np.uint8)
