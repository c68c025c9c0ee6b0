"""Deterministic synthetic world and nadir view sampler.

The generated terrain mixes smooth value-noise background with bright road
polylines, rectangular building blobs, and small scattered high-contrast
blobs, so every window of the world carries enough corners to match.
Views are cut from the world through an exact similarity transform, which
keeps the ground truth exact by construction.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from wildloc.errors import FootprintOutOfBounds, WorldTooSmall
from wildloc.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    GeoRect,
    ImageDims,
    geo_to_pixel,
    haversine_m,
)
from wildloc.localizer import PhotoMeta, write_meta_csv
from wildloc.mapstore import MapCatalog, slice_mosaic
from wildloc.raster import GrayRaster, bilinear_sample, save_gray

DEFAULT_CENTER = GeoPoint(60.4031, 22.4618)
DEFAULT_DIMS = ImageDims(2048, 2048)
DEFAULT_GSD_M = 0.5

_M_PER_DEG = math.pi * EARTH_RADIUS_M / 180.0


def rect_for_extent(center: GeoPoint, dims: ImageDims, gsd_m: float) -> GeoRect:
    """North-up rectangle around `center` whose edges span dims * gsd meters."""
    dlat = dims.height * gsd_m / _M_PER_DEG
    dlon = dims.width * gsd_m / (_M_PER_DEG * math.cos(math.radians(center.lat)))
    return GeoRect(
        GeoPoint(center.lat + dlat / 2.0, center.lon - dlon / 2.0),
        GeoPoint(center.lat - dlat / 2.0, center.lon + dlon / 2.0),
    )


@dataclass(frozen=True)
class SynthWorld:
    """Synthetic mosaic with its georeference and ground sampling distance."""

    raster: GrayRaster
    rect: GeoRect
    gsd_m: float
    seed: int

    def __post_init__(self):
        dims = self.raster.dims
        top = GeoPoint(self.rect.top_left.lat, self.rect.bottom_right.lon)
        left = GeoPoint(self.rect.bottom_right.lat, self.rect.top_left.lon)
        width_m = haversine_m(self.rect.top_left, top)
        height_m = haversine_m(self.rect.top_left, left)
        for measured, expected in (
            (width_m, dims.width * self.gsd_m),
            (height_m, dims.height * self.gsd_m),
        ):
            if abs(measured - expected) > 0.01 * expected:
                raise ValueError(
                    f"rect extent {measured:.1f} m inconsistent with "
                    f"{expected:.1f} m from dims and gsd"
                )

    @property
    def dims(self) -> ImageDims:
        return self.raster.dims


@dataclass(frozen=True)
class ViewSpec:
    """One synthetic capture: where, which heading, and how degraded."""

    center: GeoPoint
    yaw_deg: float = 0.0
    view_dims: ImageDims = ImageDims(512, 512)
    scale: float = 1.0
    noise_sigma: float = 0.0
    brightness_delta: float = 0.0


def _value_noise(rng: np.random.Generator, h: int, w: int, cell: int) -> np.ndarray:
    """Bilinearly upsampled random grid in [-1, 1]."""
    grid = rng.uniform(-1.0, 1.0, size=(h // cell + 2, w // cell + 2))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    vals, _ = bilinear_sample(grid, xx / cell, yy / cell)
    return vals


def _paint_disks(img: np.ndarray, px: np.ndarray, py: np.ndarray, radius: int, value: float):
    h, w = img.shape
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            x = np.clip(px + dx, 0, w - 1)
            y = np.clip(py + dy, 0, h - 1)
            img[y, x] = value


def _draw_roads(img: np.ndarray, rng: np.random.Generator) -> None:
    h, w = img.shape
    n_roads = int(rng.integers(4, 9))
    for _ in range(n_roads):
        width = int(rng.integers(3, 9))
        value = float(rng.integers(170, 221))
        # start on a random edge, wander to the far side
        edge = int(rng.integers(0, 4))
        if edge == 0:
            x, y, heading = float(rng.uniform(0, w)), 0.0, math.pi / 2
        elif edge == 1:
            x, y, heading = float(rng.uniform(0, w)), float(h - 1), -math.pi / 2
        elif edge == 2:
            x, y, heading = 0.0, float(rng.uniform(0, h)), 0.0
        else:
            x, y, heading = float(w - 1), float(rng.uniform(0, h)), math.pi

        points_x, points_y = [], []
        for _ in range(200):
            nx = x + 40.0 * math.cos(heading)
            ny = y + 40.0 * math.sin(heading)
            ts = np.linspace(0.0, 1.0, 81)
            points_x.append(x + (nx - x) * ts)
            points_y.append(y + (ny - y) * ts)
            x, y = nx, ny
            heading += float(rng.uniform(-0.45, 0.45))
            if not (0 <= x < w and 0 <= y < h):
                break
        px = np.rint(np.concatenate(points_x)).astype(np.intp)
        py = np.rint(np.concatenate(points_y)).astype(np.intp)
        keep = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        _paint_disks(img, px[keep], py[keep], width // 2, value)


def _draw_buildings(img: np.ndarray, rng: np.random.Generator) -> None:
    h, w = img.shape
    n = int(rng.integers(10, 51))
    for _ in range(n):
        bw = int(rng.integers(8, 49))
        bh = int(rng.integers(8, 49))
        x0 = int(rng.integers(0, w - bw))
        y0 = int(rng.integers(0, h - bh))
        bright = bool(rng.integers(0, 2))
        value = float(rng.integers(160, 236)) if bright else float(rng.integers(5, 56))
        img[y0 : y0 + bh, x0 : x0 + bw] = value


def _draw_blobs(img: np.ndarray, rng: np.random.Generator) -> None:
    h, w = img.shape
    n = max(200, (h * w) // 8000)
    for _ in range(n):
        size = int(rng.integers(2, 7))
        x0 = int(rng.integers(0, w - size))
        y0 = int(rng.integers(0, h - size))
        bright = bool(rng.integers(0, 2))
        value = float(rng.integers(170, 246)) if bright else float(rng.integers(0, 46))
        img[y0 : y0 + size, x0 : x0 + size] = value


def generate_world(
    seed: int,
    dims: ImageDims = DEFAULT_DIMS,
    rect: GeoRect | None = None,
    gsd_m: float = DEFAULT_GSD_M,
) -> SynthWorld:
    """Deterministic terrain-like world; same seed gives identical pixels."""
    if dims.width < 512 or dims.height < 512:
        raise WorldTooSmall(f"world must be at least 512x512, got {dims.width}x{dims.height}")
    if rect is None:
        rect = rect_for_extent(DEFAULT_CENTER, dims, gsd_m)

    rng = np.random.default_rng(seed)
    h, w = dims.height, dims.width
    img = np.full((h, w), 85.0)
    img += 40.0 * _value_noise(rng, h, w, 256)
    img += 20.0 * _value_noise(rng, h, w, 64)
    img += 10.0 * _value_noise(rng, h, w, 16)
    _draw_roads(img, rng)
    _draw_buildings(img, rng)
    _draw_blobs(img, rng)

    pixels = np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)
    return SynthWorld(GrayRaster(pixels), rect, gsd_m, seed)


def _noise_seed(world: SynthWorld, spec: ViewSpec) -> int:
    payload = struct.pack(
        "<q8d",
        world.seed,
        spec.center.lat,
        spec.center.lon,
        spec.yaw_deg,
        float(spec.view_dims.width),
        float(spec.view_dims.height),
        spec.scale,
        spec.noise_sigma,
        spec.brightness_delta,
    )
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def sample_view(world: SynthWorld, spec: ViewSpec) -> tuple[GrayRaster, PhotoMeta]:
    """Resample the world through the view's similarity transform.

    The returned metadata carries the true center as GNSS fields, with the
    heading recorded as gimbal yaw (drone yaw 0).
    """
    center_px = geo_to_pixel(spec.center, world.rect, world.dims)
    theta = math.radians(spec.yaw_deg)
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < 1e-12:
        c = 0.0
    if abs(s) < 1e-12:
        s = 0.0

    vw, vh = spec.view_dims.width, spec.view_dims.height
    yy, xx = np.mgrid[0:vh, 0:vw].astype(np.float64)
    # pixel-corner coordinates relative to the view center
    du = xx + 0.5 - vw / 2.0
    dv = yy + 0.5 - vh / 2.0
    k = spec.scale
    xs = center_px.x + k * (c * du - s * dv) - 0.5
    ys = center_px.y + k * (s * du + c * dv) - 0.5

    vals, valid = bilinear_sample(world.raster.pixels, xs, ys)
    if not valid.all():
        raise FootprintOutOfBounds(
            f"view at ({spec.center.lat}, {spec.center.lon}) with yaw {spec.yaw_deg} "
            "extends past the world edge"
        )

    if spec.noise_sigma > 0.0:
        rng = np.random.default_rng(_noise_seed(world, spec))
        vals = vals + rng.normal(0.0, spec.noise_sigma, size=vals.shape)
    vals = vals + spec.brightness_delta
    pixels = np.floor(np.clip(vals, 0.0, 255.0) + 0.5).astype(np.uint8)

    truth = PhotoMeta(
        filename="",
        gimbal_yaw=spec.yaw_deg,
        drone_yaw=0.0,
        gnss_lat=spec.center.lat,
        gnss_lon=spec.center.lon,
    )
    return GrayRaster(pixels), truth


def emit_dataset(
    world: SynthWorld,
    specs,
    out_dir,
    tile_dims: ImageDims = ImageDims(820, 820),
    overlap: float = 0.25,
) -> MapCatalog:
    """Write a self-contained experiment directory.

    Produces photo_###.png files, meta.csv with the ground truth filled in,
    and a sliced tile catalog (catalog.csv + tiles/) of the whole world.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    metas = []
    for i, spec in enumerate(specs):
        photo, truth = sample_view(world, spec)
        name = f"photo_{i:03d}.png"
        save_gray(photo, out / name)
        metas.append(replace(truth, filename=name))
    write_meta_csv(metas, out / "meta.csv")

    return slice_mosaic(world.raster, world.rect, tile_dims, overlap, out)
