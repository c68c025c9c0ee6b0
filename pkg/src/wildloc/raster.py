"""Grayscale raster carrier, image I/O, and the yaw-compensating rotation.

Rotation expands the canvas to the bounding box of the rotated rectangle
instead of cropping, and returns a validity mask so downstream detectors
can ignore the synthetic fill.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from wildloc.errors import DecodeError, IoError, TooSmall
from wildloc.geo import ImageDims

_SUPPORTED_FORMATS = {"PNG", "JPEG"}

# Luminance weights for RGB -> gray conversion.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class GrayRaster:
    """Single-channel 8-bit image; pixels are read-only after construction."""

    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 2-D uint8 array")
        self.pixels.flags.writeable = False

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def dims(self) -> ImageDims:
        return ImageDims(self.width, self.height)


@dataclass(frozen=True)
class ValidityMask:
    """Per-pixel flag, true where the paired raster holds real content."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.dtype != np.bool_:
            raise ValueError("bits must be a 2-D bool array")
        self.bits.flags.writeable = False

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def full(cls, width: int, height: int) -> "ValidityMask":
        return cls(np.ones((height, width), dtype=bool))


def _round_half_up(a: np.ndarray) -> np.ndarray:
    return np.floor(a + 0.5)


def load_gray(path) -> GrayRaster:
    """Load a PNG or JPEG file and convert it to 8-bit luminance.

    Conversion is L = round(0.299 R + 0.587 G + 0.114 B), rounding half up.
    """
    p = Path(path)
    try:
        fh = open(p, "rb")
    except OSError as exc:
        raise IoError(f"{p}: {exc.strerror or exc}") from None
    with fh:
        try:
            with Image.open(fh) as img:
                if img.format not in _SUPPORTED_FORMATS:
                    raise DecodeError(f"unsupported image format {img.format!r}: {p}")
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        except UnidentifiedImageError:
            raise DecodeError(f"cannot decode image: {p}") from None
        except (OSError, SyntaxError) as exc:
            # PIL reports truncated or corrupt payloads as OSError/SyntaxError.
            raise DecodeError(f"cannot decode image: {p}: {exc}") from None
    lum = _round_half_up(rgb @ _LUMA)
    return GrayRaster(lum.astype(np.uint8))


def save_gray(img: GrayRaster, path) -> None:
    """Write a raster as an 8-bit grayscale PNG."""
    Image.fromarray(img.pixels, mode="L").save(Path(path), format="PNG")


def bilinear_sample(src: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Sample a 2-D array at float coordinates with bilinear interpolation.

    Returns (values, valid) where valid marks samples whose coordinates lie
    inside the source extent [0, W-1] x [0, H-1]; out-of-range samples are 0.
    """
    h, w = src.shape
    eps = 1e-9
    valid = (xs >= -eps) & (xs <= w - 1 + eps) & (ys >= -eps) & (ys <= h - 1 + eps)
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    s = src.astype(np.float64, copy=False)
    top = (1.0 - fx) * s[y0, x0] + fx * s[y0, x1]
    bot = (1.0 - fx) * s[y1, x0] + fx * s[y1, x1]
    vals = (1.0 - fy) * top + fy * bot
    return np.where(valid, vals, 0.0), valid


def _snap(v: float) -> float:
    for target in (0.0, 1.0, -1.0):
        if abs(v - target) < 1e-12:
            return target
    return v


def rotate_expand(img: GrayRaster, degrees: float) -> tuple[GrayRaster, ValidityMask]:
    """Rotate image content clockwise about its center, expanding the canvas.

    The output canvas is the axis-aligned bounding box of the rotated
    rectangle; pixels that sample outside the source are 0 and flagged
    invalid in the returned mask.
    """
    if not math.isfinite(degrees):
        raise ValueError(f"non-finite rotation angle: {degrees}")
    theta = math.radians(degrees)
    c = _snap(math.cos(theta))
    s = _snap(math.sin(theta))
    w, h = img.width, img.height
    new_w = math.ceil(w * abs(c) + h * abs(s) - 1e-9)
    new_h = math.ceil(w * abs(s) + h * abs(c) - 1e-9)

    yy, xx = np.mgrid[0:new_h, 0:new_w].astype(np.float64)
    dx = xx - (new_w - 1) / 2.0
    dy = yy - (new_h - 1) / 2.0
    # Inverse rotation: output pixel -> source position.
    xs = c * dx + s * dy + (w - 1) / 2.0
    ys = -s * dx + c * dy + (h - 1) / 2.0

    vals, valid = bilinear_sample(img.pixels, xs, ys)
    out = _round_half_up(vals).astype(np.uint8)
    out[~valid] = 0
    return GrayRaster(out), ValidityMask(valid)


def resize_half(img: GrayRaster, levels: int) -> GrayRaster:
    """Downsample by 2x2 box-filter averaging, `levels` times."""
    if levels < 0:
        raise ValueError(f"levels must be >= 0: {levels}")
    w, h = img.width, img.height
    for _ in range(levels):
        w //= 2
        h //= 2
    if w < 32 or h < 32:
        raise TooSmall(f"{levels} halvings of {img.width}x{img.height} would go below 32 px")

    out = img.pixels
    for _ in range(levels):
        a = out.astype(np.float64)
        a = a[: 2 * (a.shape[0] // 2), : 2 * (a.shape[1] // 2)]
        mean = (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2]) / 4.0
        out = _round_half_up(mean).astype(np.uint8)
    return img if levels == 0 else GrayRaster(out)
