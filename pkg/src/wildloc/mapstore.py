"""Georeferenced tile catalog: CSV format, loading, and mosaic slicing.

The catalog is a CSV sidecar next to the tile images; each row carries the
tile filename (relative to the CSV) and the latitude/longitude of its
top-left and bottom-right corners.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from wildloc.errors import (
    FormatError,
    InvalidGeoRect,
    InvalidTileSpec,
    IoError,
    MissingImage,
)
from wildloc.geo import GeoPoint, GeoRect, ImageDims, PixelPoint, pixel_to_geo
from wildloc.raster import GrayRaster

CATALOG_HEADER = [
    "filename",
    "top_left_lat",
    "top_left_lon",
    "bottom_right_lat",
    "bottom_right_lon",
]


@dataclass(frozen=True)
class MapTile:
    """One corner-georeferenced satellite image section."""

    id: int
    image_path: Path
    rect: GeoRect
    dims: ImageDims


@dataclass(frozen=True)
class MapCatalog:
    """Ordered tile set covering the flight area."""

    tiles: tuple[MapTile, ...]
    root: Path

    def __len__(self) -> int:
        return len(self.tiles)


def _image_dims(path: Path) -> ImageDims:
    try:
        with Image.open(path) as img:
            return ImageDims(img.size[0], img.size[1])
    except FileNotFoundError:
        raise MissingImage(str(path)) from None
    except (UnidentifiedImageError, OSError) as exc:
        raise IoError(f"{path}: {exc}") from None


def load_catalog(csv_path) -> MapCatalog:
    """Load and validate a tile catalog CSV.

    Every referenced image is opened once to record its dimensions; tiles
    keep the file order of the CSV.
    """
    path = Path(csv_path)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from None

    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != CATALOG_HEADER:
            raise FormatError(f"{path}: bad header {header!r}")

        tiles = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            name = row[0]
            try:
                lat_t, lon_t, lat_b, lon_b = (float(v) for v in row[1:])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric coordinate") from None
            try:
                rect = GeoRect(GeoPoint(lat_t, lon_t), GeoPoint(lat_b, lon_b))
            except (InvalidGeoRect, ValueError) as exc:
                raise InvalidGeoRect(f"{path}:{lineno}: {exc}") from None
            image_path = path.parent / name
            dims = _image_dims(image_path)
            tiles.append(MapTile(len(tiles), image_path, rect, dims))

    if not tiles:
        raise FormatError(f"{path}: catalog lists no tiles")
    return MapCatalog(tuple(tiles), path.parent)


def write_catalog_csv(rows, csv_path) -> None:
    """Write catalog rows as (filename, GeoRect) with 15-decimal coordinates."""
    path = Path(csv_path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CATALOG_HEADER) + "\n")
        for name, rect in rows:
            fh.write(
                f"{name},{rect.top_left.lat:.15f},{rect.top_left.lon:.15f},"
                f"{rect.bottom_right.lat:.15f},{rect.bottom_right.lon:.15f}\n"
            )


def _grid_offsets(extent: int, tile: int, stride: float) -> list[int]:
    if extent == tile:
        return [0]
    count = math.ceil((extent - tile) / stride) + 1
    offsets = []
    for k in range(count):
        offsets.append(min(round(k * stride), extent - tile))
    return offsets


def slice_mosaic(
    mosaic,
    rect: GeoRect,
    tile_dims: ImageDims,
    overlap_frac: float,
    out_dir,
    catalog_name: str = "catalog.csv",
    tile_subdir: str = "tiles",
) -> MapCatalog:
    """Cut a georeferenced mosaic into overlapping tiles and write a catalog.

    Tiles are laid on a row-major grid with stride tile * (1 - overlap);
    the final row/column is clamped to the mosaic edge. Each tile's corner
    coordinates come from linear interpolation of the mosaic rectangle, so
    a pixel keeps the same geographic position in every tile covering it.
    """
    if isinstance(mosaic, GrayRaster):
        array = mosaic.pixels
    else:
        array = np.asarray(mosaic)
        if array.dtype != np.uint8 or array.ndim not in (2, 3):
            raise ValueError("mosaic must be a GrayRaster or a uint8 image array")
    if not 0.0 <= overlap_frac < 1.0:
        raise ValueError(f"overlap_frac must be in [0, 1): {overlap_frac}")

    mh, mw = array.shape[:2]
    tw, th = tile_dims.width, tile_dims.height
    if tw > mw or th > mh:
        raise InvalidTileSpec(f"tile {tw}x{th} exceeds mosaic {mw}x{mh}")

    mosaic_dims = ImageDims(mw, mh)
    xs = _grid_offsets(mw, tw, tw * (1.0 - overlap_frac))
    ys = _grid_offsets(mh, th, th * (1.0 - overlap_frac))

    out = Path(out_dir)
    tile_dir = out / tile_subdir
    try:
        tile_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"{tile_dir}: {exc.strerror or exc}") from None

    rows = []
    index = 0
    for y0 in ys:
        for x0 in xs:
            name = f"{tile_subdir}/tile_{index:03d}.png"
            tile_px = array[y0 : y0 + th, x0 : x0 + tw]
            tile_rect = GeoRect(
                pixel_to_geo(PixelPoint(x0, y0), rect, mosaic_dims),
                pixel_to_geo(PixelPoint(x0 + tw, y0 + th), rect, mosaic_dims),
            )
            try:
                Image.fromarray(tile_px).save(tile_dir / f"tile_{index:03d}.png", format="PNG")
            except OSError as exc:
                raise IoError(f"{name}: {exc}") from None
            rows.append((name, tile_rect))
            index += 1

    write_catalog_csv(rows, out / catalog_name)
    return load_catalog(out / catalog_name)
