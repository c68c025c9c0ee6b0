"""Coordinate types, pixel/geographic conversions, and geodesic distance.

Tiles are north-up and axis-aligned: latitude and longitude vary linearly
with the pixel coordinate, anchored at the two georeferenced corners.
Pixel (0, 0) is the exact top-left corner of the image and (W, H) the
exact bottom-right corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from wildloc.errors import DegenerateRect, InvalidGeoRect

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """WGS-84 position in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class GeoRect:
    """Two-corner georeference of a north-up tile."""

    top_left: GeoPoint
    bottom_right: GeoPoint

    def __post_init__(self):
        if self.top_left.lat <= self.bottom_right.lat:
            raise InvalidGeoRect(
                f"top-left latitude {self.top_left.lat} must be north of "
                f"bottom-right latitude {self.bottom_right.lat}"
            )
        if self.top_left.lon == self.bottom_right.lon:
            raise InvalidGeoRect("zero longitude extent")


@dataclass(frozen=True)
class PixelPoint:
    """Real-valued pixel position, origin top-left, y down."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite pixel coordinates: ({self.x}, {self.y})")


@dataclass(frozen=True)
class ImageDims:
    """Raster dimensions in pixels."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"dimensions must be >= 1: {self.width}x{self.height}")


def pixel_to_geo(p: PixelPoint, rect: GeoRect, dims: ImageDims) -> GeoPoint:
    """Linearly interpolate a pixel position to latitude/longitude.

    Extrapolation outside the image extent is permitted; footprint centers
    can fall past the tile edges.
    """
    lat = rect.top_left.lat + (p.y / dims.height) * (rect.bottom_right.lat - rect.top_left.lat)
    lon = rect.top_left.lon + (p.x / dims.width) * (rect.bottom_right.lon - rect.top_left.lon)
    return GeoPoint(lat, lon)


def geo_to_pixel(g: GeoPoint, rect: GeoRect, dims: ImageDims) -> PixelPoint:
    """Exact algebraic inverse of pixel_to_geo."""
    dlat = rect.bottom_right.lat - rect.top_left.lat
    dlon = rect.bottom_right.lon - rect.top_left.lon
    if dlat == 0.0 or dlon == 0.0:
        raise DegenerateRect("rectangle has zero latitude or longitude extent")
    y = dims.height * (g.lat - rect.top_left.lat) / dlat
    x = dims.width * (g.lon - rect.top_left.lon) / dlon
    return PixelPoint(x, y)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a spherical Earth (R = 6371 km)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def quad_centroid(q: Sequence[PixelPoint]) -> PixelPoint:
    """Arithmetic mean of the four vertices of a quadrilateral."""
    if len(q) != 4:
        raise ValueError(f"expected 4 vertices, got {len(q)}")
    return PixelPoint(
        sum(p.x for p in q) / 4.0,
        sum(p.y for p in q) / 4.0,
    )
