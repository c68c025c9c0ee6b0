"""End-to-end localization of drone photographs against a tile catalog.

Per photo: rotate to north-up using the recorded yaws, match against every
tile, pick the tile with the most raw matches (lowest id on ties), fit a
robust homography on that tile's matches, transform the photo boundary into
the tile, and convert the footprint center to geographic coordinates.
"""

from __future__ import annotations

import csv
import enum
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import isfinite
from pathlib import Path

from wildloc.errors import (
    DecodeError,
    FormatError,
    InsufficientPairs,
    IoError,
    NoModelFound,
    PointAtInfinity,
)
from wildloc.extmatch import ExternalMatcher
from wildloc.features import (
    ImageFeatures,
    MatcherConfig,
    MatchPair,
    extract_features,
    match_feature_sets,
)
from wildloc.geo import GeoPoint, PixelPoint, pixel_to_geo, quad_centroid
from wildloc.homography import apply_h, ransac_homography, transform_quad
from wildloc.mapstore import MapCatalog, MapTile
from wildloc.raster import load_gray, resize_half, rotate_expand, save_gray

META_HEADER = [
    "filename",
    "gimbal_yaw_deg",
    "drone_yaw_deg",
    "gnss_lat",
    "gnss_lon",
    "altitude_m",
]

CENTER_MODES = ("quad-mean", "h-center")


@dataclass(frozen=True)
class PhotoMeta:
    """Per-photo orientation metadata plus optional ground truth."""

    filename: str
    gimbal_yaw: float
    drone_yaw: float
    gnss_lat: float | None = None
    gnss_lon: float | None = None
    altitude_m: float | None = None

    def __post_init__(self):
        if not (isfinite(self.gimbal_yaw) and isfinite(self.drone_yaw)):
            raise ValueError(f"{self.filename}: non-finite yaw")
        if (self.gnss_lat is None) != (self.gnss_lon is None):
            raise ValueError(f"{self.filename}: gnss_lat and gnss_lon must come together")

    @property
    def has_truth(self) -> bool:
        return self.gnss_lat is not None

    @property
    def truth(self) -> GeoPoint:
        if self.gnss_lat is None or self.gnss_lon is None:
            raise ValueError(f"{self.filename}: no ground truth recorded")
        return GeoPoint(self.gnss_lat, self.gnss_lon)


@dataclass(frozen=True)
class LocalizerConfig:
    """Tunable parameters of the localization pipeline."""

    yaw_correction_deg: float = 0.0
    min_raw_matches: int = 4
    min_inliers: int = 10
    ransac_threshold_px: float = 5.0
    ransac_max_iters: int = 2000
    ransac_confidence: float = 0.995
    ransac_seed: int = 0
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    resize_levels: int = 0
    center_mode: str = "quad-mean"

    def __post_init__(self):
        if self.min_raw_matches < 4:
            raise ValueError("min_raw_matches must be >= 4")
        if self.min_inliers < 4:
            raise ValueError("min_inliers must be >= 4")
        if self.center_mode not in CENTER_MODES:
            raise ValueError(f"center_mode must be one of {CENTER_MODES}")
        if self.resize_levels < 0:
            raise ValueError("resize_levels must be >= 0")


class Status(str, enum.Enum):
    LOCALIZED = "Localized"
    INSUFFICIENT_MATCHES = "InsufficientMatches"
    NO_MODEL = "NoModel"
    READ_ERROR = "ReadError"


@dataclass(frozen=True)
class LocalizationResult:
    status: Status
    photo: str
    best_tile_id: int | None = None
    raw_match_count: int = 0
    inlier_count: int = 0
    footprint: tuple[PixelPoint, ...] | None = None
    position: GeoPoint | None = None

    @property
    def localized(self) -> bool:
        return self.status is Status.LOCALIZED


class _MatchContext:
    """Per-batch shared state: tile features or a live bridge process."""

    def __init__(self, catalog: MapCatalog, cfg: LocalizerConfig):
        self.catalog = catalog
        self.cfg = cfg
        self._tile_features: dict[int, ImageFeatures] = {}
        self._bridge: ExternalMatcher | None = None
        if cfg.matcher.matcher == "external":
            self._bridge = ExternalMatcher(cfg.matcher.matcher_cmd or ())

    def tile_features(self, tile: MapTile) -> ImageFeatures:
        feats = self._tile_features.get(tile.id)
        if feats is None:
            feats = extract_features(load_gray(tile.image_path), None, self.cfg.matcher)
            self._tile_features[tile.id] = feats
        return feats

    def match_all_tiles(self, rot, mask) -> list[list[MatchPair]]:
        cfg = self.cfg
        if self._bridge is not None:
            with tempfile.TemporaryDirectory(prefix="wildloc-photo-") as tmp:
                rot_path = Path(tmp) / "rotated.png"
                save_gray(rot, rot_path)
                return [
                    self._bridge.match_files(rot_path, tile.image_path)
                    for tile in self.catalog.tiles
                ]
        photo_feats = extract_features(rot, mask, cfg.matcher)
        return [
            match_feature_sets(photo_feats, self.tile_features(tile), cfg.matcher)
            for tile in self.catalog.tiles
        ]

    def close(self) -> None:
        if self._bridge is not None:
            self._bridge.close()
            self._bridge = None

    def __enter__(self) -> "_MatchContext":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _localize_prepared(photo_path, meta: PhotoMeta, ctx: _MatchContext) -> LocalizationResult:
    cfg = ctx.cfg
    name = meta.filename or str(photo_path)

    gray = load_gray(photo_path)
    if cfg.resize_levels > 0:
        gray = resize_half(gray, cfg.resize_levels)
    angle = meta.gimbal_yaw + meta.drone_yaw + cfg.yaw_correction_deg
    rot, mask = rotate_expand(gray, angle)

    per_tile = ctx.match_all_tiles(rot, mask)
    counts = [len(m) for m in per_tile]
    best_id = min(range(len(counts)), key=lambda i: (-counts[i], i))
    raw = counts[best_id]
    if raw < cfg.min_raw_matches:
        return LocalizationResult(
            Status.INSUFFICIENT_MATCHES, name, best_tile_id=best_id, raw_match_count=raw
        )

    tile = ctx.catalog.tiles[best_id]
    try:
        h, report = ransac_homography(
            per_tile[best_id],
            threshold_px=cfg.ransac_threshold_px,
            max_iters=cfg.ransac_max_iters,
            confidence=cfg.ransac_confidence,
            seed=cfg.ransac_seed,
        )
    except (InsufficientPairs, NoModelFound):
        return LocalizationResult(Status.NO_MODEL, name, best_tile_id=best_id, raw_match_count=raw)

    inliers = len(report.inlier_indices)
    if inliers < cfg.min_inliers:
        return LocalizationResult(
            Status.NO_MODEL, name, best_tile_id=best_id, raw_match_count=raw, inlier_count=inliers
        )

    try:
        quad = transform_quad(h, rot.dims)
        if cfg.center_mode == "quad-mean":
            center = quad_centroid(quad)
        else:
            center = apply_h(h, PixelPoint(rot.width / 2.0, rot.height / 2.0))
        position = pixel_to_geo(center, tile.rect, tile.dims)
    except (PointAtInfinity, ValueError):
        # A wild model put the footprint at infinity or off the globe.
        return LocalizationResult(
            Status.NO_MODEL, name, best_tile_id=best_id, raw_match_count=raw, inlier_count=inliers
        )

    return LocalizationResult(
        Status.LOCALIZED,
        name,
        best_tile_id=best_id,
        raw_match_count=raw,
        inlier_count=inliers,
        footprint=tuple(quad),
        position=position,
    )


def localize_photo(
    photo_path, meta: PhotoMeta, catalog: MapCatalog, cfg: LocalizerConfig = LocalizerConfig()
) -> LocalizationResult:
    """Run the full pipeline for a single photograph.

    Raises IoError/DecodeError for an unreadable photo; an unlocalizable
    photo is reported through the result status, never an exception.
    """
    with _MatchContext(catalog, cfg) as ctx:
        return _localize_prepared(photo_path, meta, ctx)


def localize_dataset(
    photo_dir,
    meta_csv,
    catalog: MapCatalog,
    cfg: LocalizerConfig = LocalizerConfig(),
    jobs: int = 1,
) -> list[LocalizationResult]:
    """Localize every photo listed in the metadata CSV, in row order.

    Unreadable or corrupt photos yield a ReadError result; the batch never
    aborts on a bad photo.
    """
    metas = read_meta_csv(meta_csv)
    photo_dir = Path(photo_dir)

    with _MatchContext(catalog, cfg) as ctx:
        if cfg.matcher.matcher == "builtin":
            for tile in catalog.tiles:
                ctx.tile_features(tile)

        def run_one(meta: PhotoMeta) -> LocalizationResult:
            try:
                return _localize_prepared(photo_dir / meta.filename, meta, ctx)
            except (IoError, DecodeError):
                return LocalizationResult(Status.READ_ERROR, meta.filename)

        if jobs <= 1 or len(metas) <= 1:
            return [run_one(m) for m in metas]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, metas))


def read_meta_csv(path) -> list[PhotoMeta]:
    """Parse the photo metadata CSV (empty cells mean unknown)."""
    path = Path(path)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from None

    def opt(v: str) -> float | None:
        return None if v == "" else float(v)

    metas = []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != META_HEADER:
            raise FormatError(f"{path}: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                metas.append(
                    PhotoMeta(
                        filename=row[0],
                        gimbal_yaw=float(row[1]),
                        drone_yaw=float(row[2]),
                        gnss_lat=opt(row[3]),
                        gnss_lon=opt(row[4]),
                        altitude_m=opt(row[5]),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return metas


def write_meta_csv(metas, path) -> None:
    """Write photo metadata; None fields become empty cells."""

    def cell(v) -> str:
        return "" if v is None else repr(float(v))

    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(META_HEADER) + "\n")
        for m in metas:
            fh.write(
                f"{m.filename},{cell(m.gimbal_yaw)},{cell(m.drone_yaw)},"
                f"{cell(m.gnss_lat)},{cell(m.gnss_lon)},{cell(m.altitude_m)}\n"
            )


__all__ = [
    "CENTER_MODES",
    "META_HEADER",
    "LocalizationResult",
    "LocalizerConfig",
    "PhotoMeta",
    "Status",
    "localize_dataset",
    "localize_photo",
    "read_meta_csv",
    "write_meta_csv",
]
