"""Command-line interface.

Subcommands: build-map, localize, evaluate, synth, match. Settings merge
three layers with increasing precedence: built-in defaults, an optional
key = value config file (--config or $WILDLOC_CONFIG), then command-line
flags. Exit status is 0 on success, 1 on any error (with a single
"error: <kind>: <detail>" line on stderr), and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from wildloc.errors import FormatError, WildlocError
from wildloc.evalkit import compute_errors, emit_report, summarize
from wildloc.features import MatcherConfig, match_images
from wildloc.geo import GeoPoint, GeoRect, ImageDims, PixelPoint, pixel_to_geo
from wildloc.homography import ransac_homography
from wildloc.localizer import (
    LocalizerConfig,
    PhotoMeta,
    localize_dataset,
    localize_photo,
    read_meta_csv,
)
from wildloc.mapstore import load_catalog, slice_mosaic
from wildloc.raster import load_gray
from wildloc.synth import DEFAULT_GSD_M, ViewSpec, emit_dataset, generate_world

_DEFAULTS = {
    "yaw_correction": 0.0,
    "min_raw_matches": 4,
    "min_inliers": 10,
    "ransac_threshold": 5.0,
    "ransac_max_iters": 2000,
    "ransac_confidence": 0.995,
    "seed": 0,
    "matcher": "builtin",
    "matcher_cmd": "",
    "resize_levels": 0,
    "center_mode": "quad-mean",
    "detector_threshold": 20,
    "max_keypoints": 2000,
    "ratio": 0.8,
    "cross_check": True,
    "threshold_m": 50.0,
    "jobs": 1,
}


def _parse_bool(v: str) -> bool:
    tv = v.strip().lower()
    if tv in ("true", "1", "yes", "on"):
        return True
    if tv in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


_CONFIG_TYPES = {
    "yaw_correction": float,
    "min_raw_matches": int,
    "min_inliers": int,
    "ransac_threshold": float,
    "ransac_max_iters": int,
    "ransac_confidence": float,
    "seed": int,
    "matcher": str,
    "matcher_cmd": str,
    "resize_levels": int,
    "center_mode": str,
    "detector_threshold": int,
    "max_keypoints": int,
    "ratio": float,
    "cross_check": _parse_bool,
    "threshold_m": float,
    "jobs": int,
}


def _read_config_file(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{p}: {exc.strerror or exc}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{p}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_TYPES:
            raise FormatError(f"{p}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_TYPES[key](value)
        except ValueError as exc:
            raise FormatError(f"{p}:{lineno}: {exc}") from None
    return values


def _merged_settings(args) -> dict:
    settings = dict(_DEFAULTS)
    config_path = getattr(args, "config", None) or os.environ.get("WILDLOC_CONFIG")
    if config_path:
        settings.update(_read_config_file(config_path))
    flag_to_key = {
        "yaw_correction": "yaw_correction",
        "min_inliers": "min_inliers",
        "ransac_threshold": "ransac_threshold",
        "seed": "seed",
        "matcher": "matcher",
        "matcher_cmd": "matcher_cmd",
        "threshold_m": "threshold_m",
        "jobs": "jobs",
    }
    for attr, key in flag_to_key.items():
        value = getattr(args, attr, None)
        if value is not None:
            settings[key] = value
    return settings


def _localizer_config(settings) -> LocalizerConfig:
    cmd = tuple(shlex.split(settings["matcher_cmd"])) if settings["matcher_cmd"] else None
    matcher = MatcherConfig(
        threshold=settings["detector_threshold"],
        max_count=settings["max_keypoints"],
        ratio=settings["ratio"],
        cross_check=settings["cross_check"],
        matcher=settings["matcher"],
        matcher_cmd=cmd,
    )
    try:
        return LocalizerConfig(
            yaw_correction_deg=settings["yaw_correction"],
            min_raw_matches=settings["min_raw_matches"],
            min_inliers=settings["min_inliers"],
            ransac_threshold_px=settings["ransac_threshold"],
            ransac_max_iters=settings["ransac_max_iters"],
            ransac_confidence=settings["ransac_confidence"],
            ransac_seed=settings["seed"],
            matcher=matcher,
            resize_levels=settings["resize_levels"],
            center_mode=settings["center_mode"],
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _add_matcher_flags(sub) -> None:
    sub.add_argument("--config", help="key = value settings file")
    sub.add_argument("--seed", type=int, help="RANSAC sampling seed")
    sub.add_argument("--yaw-correction", dest="yaw_correction", type=float,
                     help="extra clockwise rotation applied to every photo, degrees")
    sub.add_argument("--min-inliers", dest="min_inliers", type=int,
                     help="minimum RANSAC inliers to accept a localization")
    sub.add_argument("--ransac-threshold", dest="ransac_threshold", type=float,
                     help="inlier reprojection threshold in tile pixels")
    sub.add_argument("--matcher", choices=("builtin", "external"))
    sub.add_argument("--matcher-cmd", dest="matcher_cmd",
                     help="command line of the external matcher bridge")
    sub.add_argument("--jobs", type=int, help="worker parallelism for batch runs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wildloc",
        description="Localize aerial photographs against a georeferenced satellite tile catalog.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("build-map", help="slice a georeferenced mosaic into a tile catalog")
    p.add_argument("--mosaic", required=True, help="mosaic image (PNG or JPEG)")
    p.add_argument("--rect", required=True,
                   help="lat_t,lon_t,lat_b,lon_b of the mosaic corners")
    p.add_argument("--tile-width", dest="tile_width", type=int, default=1400)
    p.add_argument("--tile-height", dest="tile_height", type=int, default=1200)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_map)

    p = subs.add_parser("localize", help="localize a single photo")
    p.add_argument("--photo", required=True)
    p.add_argument("--map", dest="map_csv", required=True, help="catalog CSV")
    p.add_argument("--gimbal-yaw", dest="gimbal_yaw", type=float, default=0.0)
    p.add_argument("--drone-yaw", dest="drone_yaw", type=float, default=0.0)
    _add_matcher_flags(p)
    p.set_defaults(func=_cmd_localize)

    p = subs.add_parser("evaluate", help="batch localization with report")
    p.add_argument("--photos", required=True, help="photo directory")
    p.add_argument("--meta", required=True, help="metadata CSV")
    p.add_argument("--map", dest="map_csv", required=True, help="catalog CSV")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--threshold-m", dest="threshold_m", type=float,
                   help="success threshold in meters")
    _add_matcher_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = subs.add_parser("synth", help="generate a synthetic ground-truth dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--views", type=int, default=50)
    p.add_argument("--world-dim", dest="world_dim", type=int, default=2048)
    p.add_argument("--gsd", type=float, default=DEFAULT_GSD_M)
    p.add_argument("--tile-dim", dest="tile_dim", type=int, default=820)
    p.add_argument("--overlap", type=float, default=0.25)
    p.add_argument("--view-dim", dest="view_dim", type=int, default=512)
    p.add_argument("--yaw-range", dest="yaw_range", type=float, default=30.0,
                   help="yaws drawn uniformly from [-range, +range] degrees")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=4.0)
    p.add_argument("--brightness", type=float, default=10.0,
                   help="brightness offsets drawn uniformly from [-b, +b]")
    p.set_defaults(func=_cmd_synth)

    p = subs.add_parser("match", help="match two images and fit a homography (debug aid)")
    p.add_argument("--image-a", dest="image_a", required=True)
    p.add_argument("--image-b", dest="image_b", required=True)
    _add_matcher_flags(p)
    p.set_defaults(func=_cmd_match)

    return parser


def _cmd_build_map(args) -> int:
    parts = args.rect.split(",")
    if len(parts) != 4:
        raise FormatError(f"--rect needs 4 comma-separated values, got {len(parts)}")
    try:
        lat_t, lon_t, lat_b, lon_b = (float(v) for v in parts)
    except ValueError:
        raise FormatError(f"--rect has non-numeric values: {args.rect}") from None
    rect = GeoRect(GeoPoint(lat_t, lon_t), GeoPoint(lat_b, lon_b))
    mosaic = load_gray(args.mosaic)
    catalog = slice_mosaic(
        mosaic, rect, ImageDims(args.tile_width, args.tile_height), args.overlap, args.out
    )
    print(f"wrote {len(catalog)} tiles under {args.out}")
    return 0


def _cmd_localize(args) -> int:
    settings = _merged_settings(args)
    cfg = _localizer_config(settings)
    catalog = load_catalog(args.map_csv)
    meta = PhotoMeta(
        filename=Path(args.photo).name,
        gimbal_yaw=args.gimbal_yaw,
        drone_yaw=args.drone_yaw,
    )
    r = localize_photo(args.photo, meta, catalog, cfg)
    lat = f"{r.position.lat:.10f}" if r.position else "-"
    lon = f"{r.position.lon:.10f}" if r.position else "-"
    tile = str(r.best_tile_id) if r.best_tile_id is not None else "-"
    print(f"{r.status.value} {lat} {lon} {tile} {r.raw_match_count} {r.inlier_count}")
    return 0


def _cmd_evaluate(args) -> int:
    settings = _merged_settings(args)
    cfg = _localizer_config(settings)
    catalog = load_catalog(args.map_csv)
    metas = read_meta_csv(args.meta)
    truth = {m.filename: m for m in metas}
    results = localize_dataset(args.photos, args.meta, catalog, cfg, jobs=settings["jobs"])
    errors = compute_errors(results, truth)
    summary = summarize(errors, settings["threshold_m"])
    paths = emit_report(summary, results, truth, args.out)

    from wildloc.plots import render_report_figures

    paths.update(render_report_figures(summary, results, truth, args.out))
    mae = f"{summary.mae_m:.3f} m" if summary.mae_m is not None else "n/a"
    print(
        f"localized {summary.n_localized}/{summary.n_total}, "
        f"success {summary.n_success}/{summary.n_total} "
        f"(< {summary.success_threshold_m:g} m), mae {mae}"
    )
    return 0


def _cmd_synth(args) -> int:
    dims = ImageDims(args.world_dim, args.world_dim)
    world = generate_world(args.seed, dims, gsd_m=args.gsd)
    rng = np.random.default_rng([args.seed, 1])

    view = ImageDims(args.view_dim, args.view_dim)
    # keep the whole rotated footprint inside the world for any yaw
    margin = int(np.hypot(view.width, view.height) / 2) + 3
    w, h = world.dims.width, world.dims.height

    specs = []
    for _ in range(args.views):
        px = rng.uniform(margin, w - margin)
        py = rng.uniform(margin, h - margin)
        center = pixel_to_geo(PixelPoint(px, py), world.rect, world.dims)
        specs.append(
            ViewSpec(
                center=center,
                yaw_deg=float(rng.uniform(-args.yaw_range, args.yaw_range)),
                view_dims=view,
                scale=1.0,
                noise_sigma=args.noise_sigma,
                brightness_delta=float(rng.uniform(-args.brightness, args.brightness)),
            )
        )

    catalog = emit_dataset(world, specs, args.out, ImageDims(args.tile_dim, args.tile_dim), args.overlap)
    print(f"wrote {len(specs)} photos and {len(catalog)} tiles under {args.out}")
    return 0


def _cmd_match(args) -> int:
    settings = _merged_settings(args)
    cfg = _localizer_config(settings)
    a = load_gray(args.image_a)
    b = load_gray(args.image_b)
    pairs = match_images(a, b, cfg.matcher)
    print(f"matches {len(pairs)}")
    if len(pairs) >= 4:
        try:
            h, report = ransac_homography(
                pairs,
                threshold_px=cfg.ransac_threshold_px,
                max_iters=cfg.ransac_max_iters,
                confidence=cfg.ransac_confidence,
                seed=cfg.ransac_seed,
            )
        except WildlocError:
            print("inliers 0")
            return 0
        print(f"inliers {len(report.inlier_indices)}")
        for row in h.m:
            print("H " + " ".join(f"{v:.10g}" for v in row))
    else:
        print("inliers 0")
    return 0


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except WildlocError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
