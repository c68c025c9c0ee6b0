"""Tests for coordinate conversions, haversine distance, and quad center."""

import math

import numpy as np
import pytest

from wildloc.errors import InvalidGeoRect
from wildloc.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    GeoRect,
    ImageDims,
    PixelPoint,
    geo_to_pixel,
    haversine_m,
    pixel_to_geo,
    quad_centroid,
)

RECT = GeoRect(GeoPoint(60.4100, 22.4500), GeoPoint(60.4000, 22.4700))
DIMS = ImageDims(1400, 1200)


class TestPixelToGeo:
    def test_top_left_corner_identity(self):
        g = pixel_to_geo(PixelPoint(0, 0), RECT, DIMS)
        assert g == GeoPoint(60.4100, 22.4500)

    def test_bottom_right_corner_identity(self):
        g = pixel_to_geo(PixelPoint(1400, 1200), RECT, DIMS)
        assert g == GeoPoint(60.4000, 22.4700)

    def test_midpoint(self):
        g = pixel_to_geo(PixelPoint(700, 600), RECT, DIMS)
        assert g.lat == pytest.approx(60.4050, abs=1e-12)
        assert g.lon == pytest.approx(22.4600, abs=1e-12)

    def test_quarter_point(self):
        # direct evaluation of the linear interpolation at fraction 0.25
        g = pixel_to_geo(PixelPoint(350, 300), RECT, DIMS)
        assert g.lat == pytest.approx(60.4075, abs=1e-12)
        assert g.lon == pytest.approx(22.4550, abs=1e-12)

    def test_extrapolation_outside_image(self):
        g = pixel_to_geo(PixelPoint(-700, -600), RECT, DIMS)
        assert g.lat == pytest.approx(60.4150, abs=1e-12)
        assert g.lon == pytest.approx(22.4400, abs=1e-12)

    def test_linearity_of_midpoints(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p1 = PixelPoint(*rng.uniform(-500, 2000, 2))
            p2 = PixelPoint(*rng.uniform(-500, 2000, 2))
            mid = PixelPoint((p1.x + p2.x) / 2, (p1.y + p2.y) / 2)
            g1 = pixel_to_geo(p1, RECT, DIMS)
            g2 = pixel_to_geo(p2, RECT, DIMS)
            gm = pixel_to_geo(mid, RECT, DIMS)
            assert gm.lat == pytest.approx((g1.lat + g2.lat) / 2, abs=1e-12)
            assert gm.lon == pytest.approx((g1.lon + g2.lon) / 2, abs=1e-12)


class TestGeoToPixel:
    def test_corner_identity(self):
        p = geo_to_pixel(GeoPoint(60.4100, 22.4500), RECT, DIMS)
        assert (p.x, p.y) == (0.0, 0.0)

    def test_midpoint(self):
        p = geo_to_pixel(GeoPoint(60.4050, 22.4600), RECT, DIMS)
        assert p.x == pytest.approx(700, abs=1e-6)
        assert p.y == pytest.approx(600, abs=1e-6)

    def test_quarter_point_inverts_interpolation(self):
        p = geo_to_pixel(GeoPoint(60.4075, 22.4550), RECT, DIMS)
        assert p.x == pytest.approx(350, abs=1e-6)
        assert p.y == pytest.approx(300, abs=1e-6)

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            rect = _random_rect(rng)
            dims = ImageDims(int(rng.integers(100, 4000)), int(rng.integers(100, 4000)))
            p = PixelPoint(
                float(rng.uniform(-0.25, 1.25) * dims.width),
                float(rng.uniform(-0.25, 1.25) * dims.height),
            )
            g = pixel_to_geo(p, rect, dims)
            q = geo_to_pixel(g, rect, dims)
            assert abs(q.x - p.x) < 1e-6
            assert abs(q.y - p.y) < 1e-6


class TestHaversine:
    def test_identity_is_zero(self):
        a = GeoPoint(60.403091, 22.461824)
        assert haversine_m(a, a) == 0.0

    def test_meridian_arc(self):
        # independent closed form: d = R * delta_phi along a meridian
        expected = EARTH_RADIUS_M * math.radians(0.1)
        d = haversine_m(GeoPoint(60.0, 22.0), GeoPoint(60.1, 22.0))
        assert d == pytest.approx(expected, abs=1e-6)
        assert d == pytest.approx(11119.5, abs=0.1)

    def test_parallel_arc_at_60(self):
        # independent spherical law of cosines
        lat = math.radians(60.0)
        expected = EARTH_RADIUS_M * math.acos(
            math.sin(lat) ** 2 + math.cos(lat) ** 2 * math.cos(math.radians(0.1))
        )
        d = haversine_m(GeoPoint(60.0, 22.0), GeoPoint(60.0, 22.1))
        assert d == pytest.approx(expected, abs=1e-6)
        assert d == pytest.approx(5559.7, abs=0.1)

    def test_symmetry_and_monotonicity(self):
        rng = np.random.default_rng(13)
        base = GeoPoint(60.0, 22.0)
        prev = 0.0
        for step in np.linspace(0.01, 0.5, 20):
            p = GeoPoint(60.0 + step, 22.0)
            d = haversine_m(base, p)
            assert d == haversine_m(p, base)
            assert d > prev
            prev = d
        for _ in range(50):
            a = GeoPoint(*rng.uniform([-80, -170], [80, 170]))
            b = GeoPoint(*rng.uniform([-80, -170], [80, 170]))
            assert haversine_m(a, b) == haversine_m(b, a)


class TestQuadCentroid:
    def test_unit_square(self):
        q = [PixelPoint(0, 0), PixelPoint(1, 0), PixelPoint(1, 1), PixelPoint(0, 1)]
        assert quad_centroid(q) == PixelPoint(0.5, 0.5)

    def test_rectangle_center(self):
        q = [PixelPoint(0, 0), PixelPoint(1400, 0), PixelPoint(1400, 1200), PixelPoint(0, 1200)]
        assert quad_centroid(q) == PixelPoint(700, 600)

    def test_irregular_quad_vertex_mean(self):
        q = [PixelPoint(0, 0), PixelPoint(2, 0), PixelPoint(2, 2), PixelPoint(0, 4)]
        assert quad_centroid(q) == PixelPoint(1, 1.5)

    def test_cyclic_invariance(self):
        rng = np.random.default_rng(3)
        pts = [PixelPoint(*rng.uniform(0, 100, 2)) for _ in range(4)]
        ref = quad_centroid(pts)
        for shift in range(1, 4):
            rotated = pts[shift:] + pts[:shift]
            c = quad_centroid(rotated)
            assert c.x == pytest.approx(ref.x, abs=1e-12)
            assert c.y == pytest.approx(ref.y, abs=1e-12)

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            quad_centroid([PixelPoint(0, 0)] * 3)


class TestTypes:
    def test_geopoint_bounds(self):
        with pytest.raises(ValueError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            GeoPoint(0.0, -181.0)

    def test_georect_requires_north_above_south(self):
        with pytest.raises(InvalidGeoRect):
            GeoRect(GeoPoint(60.40, 22.45), GeoPoint(60.41, 22.47))

    def test_georect_requires_lon_extent(self):
        with pytest.raises(InvalidGeoRect):
            GeoRect(GeoPoint(60.41, 22.45), GeoPoint(60.40, 22.45))

    def test_pixelpoint_rejects_nan(self):
        with pytest.raises(ValueError):
            PixelPoint(float("nan"), 0.0)

    def test_dims_floor(self):
        with pytest.raises(ValueError):
            ImageDims(0, 5)


def _random_rect(rng) -> GeoRect:
    lat_t = float(rng.uniform(-80, 80))
    lon_t = float(rng.uniform(-170, 170))
    return GeoRect(
        GeoPoint(lat_t, lon_t),
        GeoPoint(lat_t - float(rng.uniform(0.001, 0.5)), lon_t + float(rng.uniform(0.001, 0.5))),
    )
