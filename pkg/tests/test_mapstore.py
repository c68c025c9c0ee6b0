"""Tests for catalog loading/validation and mosaic slicing."""

import numpy as np
import pytest
from PIL import Image

from wildloc.errors import FormatError, InvalidGeoRect, InvalidTileSpec, MissingImage
from wildloc.geo import GeoPoint, GeoRect, ImageDims, PixelPoint, pixel_to_geo
from wildloc.mapstore import load_catalog, slice_mosaic
from wildloc.raster import GrayRaster

RECT = GeoRect(GeoPoint(60.4100, 22.4500), GeoPoint(60.4000, 22.4700))


def _write_tile(path, w=1400, h=1200):
    Image.fromarray(np.zeros((h, w), dtype=np.uint8)).save(path, format="PNG")


def _write_catalog(path, rows):
    header = "filename,top_left_lat,top_left_lon,bottom_right_lat,bottom_right_lon"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


class TestLoadCatalog:
    def test_minimal_valid_catalog(self, tmp_path):
        _write_tile(tmp_path / "t0.png")
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, ["t0.png,60.4100,22.4500,60.4000,22.4700"])
        cat = load_catalog(csv)
        assert len(cat) == 1
        tile = cat.tiles[0]
        assert tile.id == 0
        assert (tile.dims.width, tile.dims.height) == (1400, 1200)
        assert tile.rect.top_left == GeoPoint(60.41, 22.45)

    def test_inverted_corners_rejected(self, tmp_path):
        _write_tile(tmp_path / "t0.png")
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, ["t0.png,60.40,22.45,60.41,22.47"])
        with pytest.raises(InvalidGeoRect):
            load_catalog(csv)

    def test_missing_image_named(self, tmp_path):
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, ["ghost.png,60.41,22.45,60.40,22.47"])
        with pytest.raises(MissingImage) as exc:
            load_catalog(csv)
        assert "ghost.png" in str(exc.value)

    def test_bad_header(self, tmp_path):
        csv = tmp_path / "catalog.csv"
        csv.write_text("file,a,b,c,d\nx.png,1,2,3,4\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_catalog(csv)

    def test_wrong_arity(self, tmp_path):
        _write_tile(tmp_path / "t0.png")
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, ["t0.png,60.41,22.45,60.40"])
        with pytest.raises(FormatError):
            load_catalog(csv)

    def test_non_numeric(self, tmp_path):
        _write_tile(tmp_path / "t0.png")
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, ["t0.png,north,22.45,60.40,22.47"])
        with pytest.raises(FormatError):
            load_catalog(csv)

    def test_empty_catalog_rejected(self, tmp_path):
        csv = tmp_path / "catalog.csv"
        _write_catalog(csv, [])
        with pytest.raises(FormatError):
            load_catalog(csv)

    def test_tile_order_is_file_order(self, tmp_path):
        for name in ("b.png", "a.png"):
            _write_tile(tmp_path / name, 100, 100)
        csv = tmp_path / "catalog.csv"
        _write_catalog(
            csv,
            [
                "b.png,60.41,22.45,60.40,22.47",
                "a.png,60.42,22.45,60.41,22.47",
            ],
        )
        cat = load_catalog(csv)
        assert [t.image_path.name for t in cat.tiles] == ["b.png", "a.png"]
        assert [t.id for t in cat.tiles] == [0, 1]


class TestSliceMosaic:
    def _mosaic(self, w=2800, h=2400, seed=0):
        rng = np.random.default_rng(seed)
        return GrayRaster(rng.integers(0, 256, size=(h, w), dtype=np.uint8))

    def test_no_overlap_grid(self, tmp_path):
        mosaic = self._mosaic()
        cat = slice_mosaic(mosaic, RECT, ImageDims(1400, 1200), 0.0, tmp_path)
        assert len(cat) == 4
        # row 0, col 1 starts at the horizontal midpoint of the mosaic
        t = cat.tiles[1]
        mid_lon = (RECT.top_left.lon + RECT.bottom_right.lon) / 2
        assert t.rect.top_left.lon == pytest.approx(mid_lon, abs=1e-12)
        assert t.rect.top_left.lat == pytest.approx(RECT.top_left.lat, abs=1e-12)

    def test_half_overlap_grid(self, tmp_path):
        cat = slice_mosaic(self._mosaic(), RECT, ImageDims(1400, 1200), 0.5, tmp_path)
        assert len(cat) == 9

    def test_oversize_tile_rejected(self, tmp_path):
        with pytest.raises(InvalidTileSpec):
            slice_mosaic(self._mosaic(), RECT, ImageDims(4000, 4000), 0.0, tmp_path)

    def test_georeference_consistency(self, tmp_path):
        mosaic = self._mosaic(800, 600, seed=1)
        mosaic_dims = ImageDims(800, 600)
        cat = slice_mosaic(mosaic, RECT, ImageDims(500, 400), 0.25, tmp_path)
        rng = np.random.default_rng(2)
        from wildloc.raster import load_gray

        for tile in cat.tiles:
            ox, oy = _tile_offset(tile, mosaic_dims, RECT)
            for _ in range(20):
                px = float(rng.uniform(0, tile.dims.width))
                py = float(rng.uniform(0, tile.dims.height))
                via_tile = pixel_to_geo(PixelPoint(px, py), tile.rect, tile.dims)
                via_mosaic = pixel_to_geo(PixelPoint(ox + px, oy + py), RECT, mosaic_dims)
                assert via_tile.lat == pytest.approx(via_mosaic.lat, abs=1e-9)
                assert via_tile.lon == pytest.approx(via_mosaic.lon, abs=1e-9)
            # pixel content matches the mosaic window
            back = load_gray(tile.image_path)
            window = mosaic.pixels[int(oy) : int(oy) + 400, int(ox) : int(ox) + 500]
            assert (back.pixels == window).all()

    def test_full_coverage_no_overlap(self, tmp_path):
        mosaic = self._mosaic(1000, 900, seed=3)
        cat = slice_mosaic(mosaic, RECT, ImageDims(400, 300), 0.0, tmp_path)
        covered = np.zeros((900, 1000), dtype=bool)
        mosaic_dims = ImageDims(1000, 900)
        for tile in cat.tiles:
            ox, oy = _tile_offset(tile, mosaic_dims, RECT)
            covered[int(oy) : int(oy) + 300, int(ox) : int(ox) + 400] = True
        assert covered.all()

    def test_round_trip_load(self, tmp_path):
        cat1 = slice_mosaic(self._mosaic(), RECT, ImageDims(1400, 1200), 0.25, tmp_path)
        cat2 = load_catalog(tmp_path / "catalog.csv")
        assert len(cat1) == len(cat2)
        for a, b in zip(cat1.tiles, cat2.tiles):
            assert a.id == b.id
            assert a.image_path == b.image_path
            assert a.rect.top_left.lat == pytest.approx(b.rect.top_left.lat, abs=1e-13)
            assert a.rect.bottom_right.lon == pytest.approx(b.rect.bottom_right.lon, abs=1e-13)


def _tile_offset(tile, mosaic_dims, rect):
    """Recover the tile's pixel offset in the mosaic from its georeference."""
    from wildloc.geo import geo_to_pixel

    p = geo_to_pixel(tile.rect.top_left, rect, mosaic_dims)
    return round(p.x), round(p.y)
