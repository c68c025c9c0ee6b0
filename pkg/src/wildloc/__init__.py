"""GNSS-free visual geolocalization of aerial photographs.

Matches a drone photograph against a catalog of corner-georeferenced
satellite tiles, fits a robust homography to the best tile, and converts
the photo footprint center into latitude/longitude.
"""

from wildloc.errors import WildlocError
from wildloc.evalkit import EvalSummary, compute_errors, emit_report, summarize
from wildloc.features import (
    Descriptor,
    Keypoint,
    MatcherConfig,
    MatchPair,
    compute_descriptors,
    detect_keypoints,
    match_descriptors,
    match_images,
)
from wildloc.geo import (
    GeoPoint,
    GeoRect,
    ImageDims,
    PixelPoint,
    geo_to_pixel,
    haversine_m,
    pixel_to_geo,
    quad_centroid,
)
from wildloc.homography import (
    Homography,
    RansacReport,
    apply_h,
    estimate_dlt,
    ransac_homography,
    transform_quad,
)
from wildloc.localizer import (
    LocalizationResult,
    LocalizerConfig,
    PhotoMeta,
    Status,
    localize_dataset,
    localize_photo,
)
from wildloc.mapstore import MapCatalog, MapTile, load_catalog, slice_mosaic
from wildloc.raster import GrayRaster, ValidityMask, load_gray, resize_half, rotate_expand
from wildloc.synth import SynthWorld, ViewSpec, emit_dataset, generate_world, sample_view

__version__ = "0.1.0"

__all__ = [
    "Descriptor",
    "EvalSummary",
    "GeoPoint",
    "GeoRect",
    "GrayRaster",
    "Homography",
    "ImageDims",
    "Keypoint",
    "LocalizationResult",
    "LocalizerConfig",
    "MapCatalog",
    "MapTile",
    "MatchPair",
    "MatcherConfig",
    "PhotoMeta",
    "PixelPoint",
    "RansacReport",
    "Status",
    "SynthWorld",
    "ValidityMask",
    "ViewSpec",
    "WildlocError",
    "apply_h",
    "compute_descriptors",
    "compute_errors",
    "detect_keypoints",
    "emit_dataset",
    "emit_report",
    "estimate_dlt",
    "generate_world",
    "geo_to_pixel",
    "haversine_m",
    "load_catalog",
    "load_gray",
    "localize_dataset",
    "localize_photo",
    "match_descriptors",
    "match_images",
    "pixel_to_geo",
    "quad_centroid",
    "ransac_homography",
    "resize_half",
    "rotate_expand",
    "sample_view",
    "slice_mosaic",
    "summarize",
    "transform_quad",
]
