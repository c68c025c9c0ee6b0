"""Built-in keypoint detection, binary description, and descriptor matching.

The detector is a 16-pixel segment-test corner detector; descriptors are
256 fixed intensity comparisons on a box-smoothed 31x31 patch, matched by
Hamming distance with a ratio test and optional cross-checking. The whole
chain is deterministic: the comparison-pair table ships as a data file and
there is no hidden randomness.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from wildloc.errors import OutOfBounds
from wildloc.geo import PixelPoint
from wildloc.raster import GrayRaster, ValidityMask

# Offsets of the 16-pixel circle of radius 3, clockwise from 12 o'clock.
_CIRCLE = np.array(
    [
        (0, -3), (1, -3), (2, -2), (3, -1),
        (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1),
        (-3, 0), (-3, -1), (-2, -2), (-1, -3),
    ],
    dtype=np.intp,
)

# An ideal 90-degree corner lights only 5 of the 16 circle pixels, leaving a
# maximum contiguous arc of 11, so requiring 12 would never fire on square
# corners; 9 is the standard segment-test arc length.
_ARC_LEN = 9
_PATCH_MARGIN = 16     # minimum keypoint distance from every border
_DESC_BITS = 256


def _build_arc_lut() -> np.ndarray:
    """For every 16-bit circle pattern: does it contain a circular run of 9?"""
    codes = np.arange(1 << 16, dtype=np.uint32)
    doubled = codes | (codes << np.uint32(16))
    acc = doubled.copy()
    for k in range(1, _ARC_LEN):
        acc &= doubled >> np.uint32(k)
    # bit i of acc marks a run of 12 ones starting at circle position i
    return (acc & np.uint32(0xFFFF)) != 0


_ARC_LUT = _build_arc_lut()


def _load_pair_table() -> np.ndarray:
    ref = importlib.resources.files("wildloc").joinpath("data/descriptor_pairs_256.txt")
    with ref.open("r") as fh:
        table = np.loadtxt(fh, dtype=np.intp, comments="#")
    if table.shape != (_DESC_BITS, 4):
        raise RuntimeError(f"descriptor pair table has shape {table.shape}")
    return table


_PAIRS = _load_pair_table()


@dataclass(frozen=True)
class Keypoint:
    """Detected corner with its response strength."""

    pos: PixelPoint
    score: float


@dataclass(frozen=True)
class Descriptor:
    """256-bit binary signature, packed into 32 bytes."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.shape != (32,) or self.bits.dtype != np.uint8:
            raise ValueError("descriptor must be 32 packed uint8 bytes")
        self.bits.flags.writeable = False


@dataclass(frozen=True)
class IndexMatch:
    """Accepted nearest-neighbor match between two descriptor sequences."""

    index_a: int
    index_b: int
    distance: int
    confidence: float


@dataclass(frozen=True)
class MatchPair:
    """Point correspondence from the drone image (a) to the tile image (b)."""

    a: PixelPoint
    b: PixelPoint
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0, 1]: {self.confidence}")


@dataclass(frozen=True)
class MatcherConfig:
    """Parameters of the built-in matcher and external-matcher selection."""

    threshold: int = 20
    max_count: int = 2000
    ratio: float = 0.8
    cross_check: bool = True
    matcher: str = "builtin"                     # "builtin" | "external"
    matcher_cmd: tuple[str, ...] | None = None   # argv for the external bridge

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if self.max_count < 1:
            raise ValueError("max_count must be >= 1")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("ratio must be in (0, 1]")
        if self.matcher not in ("builtin", "external"):
            raise ValueError(f"unknown matcher {self.matcher!r}")


@dataclass(frozen=True)
class ImageFeatures:
    """Keypoints plus their descriptors for one image."""

    keypoints: tuple[Keypoint, ...]
    descriptors: tuple[Descriptor, ...]

    def __len__(self) -> int:
        return len(self.keypoints)


def detect_keypoints(
    img: GrayRaster,
    mask: Optional[ValidityMask] = None,
    threshold: int = 20,
    max_count: int = 2000,
) -> list[Keypoint]:
    """Segment-test corners with 3x3 non-maximum suppression.

    A pixel is a corner when at least 9 contiguous circle pixels are all
    brighter or all darker than the center by >= threshold. The response is
    the total circle contrast beyond the threshold. Keypoints closer than
    16 px to a border, or whose 31x31 patch touches an invalid mask pixel,
    are discarded. Result is sorted by descending score (ties row-major)
    and truncated to max_count.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    h, w = img.height, img.width
    if h < 2 * _PATCH_MARGIN + 1 or w < 2 * _PATCH_MARGIN + 1:
        return []

    px = img.pixels.astype(np.int16)
    center = px[3 : h - 3, 3 : w - 3]
    code_bright = np.zeros(center.shape, dtype=np.uint16)
    code_dark = np.zeros(center.shape, dtype=np.uint16)
    excess = np.zeros(center.shape, dtype=np.int32)
    for i, (ox, oy) in enumerate(_CIRCLE):
        ring = px[3 + oy : h - 3 + oy, 3 + ox : w - 3 + ox]
        diff = ring - center
        code_bright |= (diff >= threshold).astype(np.uint16) << i
        code_dark |= (-diff >= threshold).astype(np.uint16) << i
        excess += np.maximum(np.abs(diff, dtype=np.int32) - threshold, 0)

    is_corner = _ARC_LUT[code_bright] | _ARC_LUT[code_dark]
    score = np.where(is_corner, excess, 0)

    # 3x3 non-maximum suppression on the response map.
    local_max = ndimage.maximum_filter(score, size=3, mode="constant", cval=0)
    keep = is_corner & (score == local_max)

    ys, xs = np.nonzero(keep)
    scores = score[ys, xs]
    xs = xs + 3
    ys = ys + 3

    inside = (
        (xs >= _PATCH_MARGIN)
        & (xs <= w - 1 - _PATCH_MARGIN)
        & (ys >= _PATCH_MARGIN)
        & (ys <= h - 1 - _PATCH_MARGIN)
    )
    xs, ys, scores = xs[inside], ys[inside], scores[inside]

    if mask is not None:
        if mask.width != w or mask.height != h:
            raise ValueError("mask dimensions do not match the raster")
        eroded = ndimage.minimum_filter(
            mask.bits.astype(np.uint8), size=31, mode="constant", cval=0
        ).astype(bool)
        ok = eroded[ys, xs]
        xs, ys, scores = xs[ok], ys[ok], scores[ok]

    order = np.lexsort((xs, ys, -scores))[:max_count]
    return [
        Keypoint(PixelPoint(float(xs[i]), float(ys[i])), float(scores[i]))
        for i in order
    ]


def _box_sum_5x5(px: np.ndarray) -> np.ndarray:
    """Exact integer 5x5 window sums with replicated edges.

    Comparing window sums is equivalent to comparing box-filter means and
    stays free of float rounding, so descriptor bits are reproducible.
    """
    padded = np.pad(px.astype(np.int64), 2, mode="edge")
    ii = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    ii[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
    h, w = px.shape
    return ii[5 : 5 + h, 5 : 5 + w] - ii[:h, 5 : 5 + w] - ii[5 : 5 + h, :w] + ii[:h, :w]


def compute_descriptors(img: GrayRaster, kps: Sequence[Keypoint]) -> list[Descriptor]:
    """Binary descriptors from the fixed comparison-pair table.

    Bit i is 1 iff the smoothed intensity at the pair's first point is
    strictly less than at its second point.
    """
    if not kps:
        return []
    w, h = img.width, img.height
    xs = np.array([kp.pos.x for kp in kps])
    ys = np.array([kp.pos.y for kp in kps])
    bad = (
        (xs < _PATCH_MARGIN)
        | (xs > w - 1 - _PATCH_MARGIN)
        | (ys < _PATCH_MARGIN)
        | (ys > h - 1 - _PATCH_MARGIN)
    )
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise OutOfBounds(
            f"keypoint at ({xs[i]}, {ys[i]}) is closer than {_PATCH_MARGIN} px to a border"
        )

    smooth = _box_sum_5x5(img.pixels)
    xi = np.rint(xs).astype(np.intp)
    yi = np.rint(ys).astype(np.intp)
    first = smooth[yi[:, None] + _PAIRS[:, 1], xi[:, None] + _PAIRS[:, 0]]
    second = smooth[yi[:, None] + _PAIRS[:, 3], xi[:, None] + _PAIRS[:, 2]]
    bits = first < second
    packed = np.packbits(bits, axis=1)
    return [Descriptor(packed[i].copy()) for i in range(packed.shape[0])]


def _pack_matrix(descs: Sequence[Descriptor]) -> np.ndarray:
    return np.stack([d.bits for d in descs]).view(np.uint64)


def _hamming_table(da: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between packed descriptor matrices."""
    na = da.shape[0]
    out = np.empty((na, db.shape[0]), dtype=np.uint16)
    step = 512
    for start in range(0, na, step):
        chunk = da[start : start + step]
        xor = chunk[:, None, :] ^ db[None, :, :]
        out[start : start + step] = np.bitwise_count(xor).sum(axis=2, dtype=np.uint16)
    return out


def match_descriptors(
    da: Sequence[Descriptor],
    db: Sequence[Descriptor],
    ratio: float = 0.8,
    cross_check: bool = True,
) -> list[IndexMatch]:
    """Nearest-neighbor Hamming matching with a ratio test.

    Keeps a candidate when its distance d1 to the nearest neighbor in `db`
    beats ratio * d2 of the second nearest (trivially passed when `db` has
    a single entry). With cross_check the correspondence must be mutual and
    the ratio test is applied in both directions, so swapping the arguments
    yields the same set of pairs. Distance ties resolve to the lowest index.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must be in (0, 1]")
    if not da or not db:
        return []
    dist = _hamming_table(_pack_matrix(da), _pack_matrix(db))
    na, nb = dist.shape

    def nearest_two(d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        j1 = d.argmin(axis=1)
        rows = np.arange(d.shape[0])
        d1 = d[rows, j1]
        if d.shape[1] < 2:
            d2 = np.full(d.shape[0], np.inf)
        else:
            masked = d.astype(np.float64)
            masked[rows, j1] = np.inf
            d2 = masked.min(axis=1)
        return j1, d1.astype(np.int64), d2

    fwd_j, fwd_d1, fwd_d2 = nearest_two(dist)
    passes = fwd_d1 < ratio * fwd_d2

    if cross_check:
        bwd_j, bwd_d1, bwd_d2 = nearest_two(dist.T)
        mutual = bwd_j[fwd_j] == np.arange(na)
        passes &= mutual & (fwd_d1 < ratio * bwd_d2[fwd_j])

    return [
        IndexMatch(int(i), int(fwd_j[i]), int(fwd_d1[i]), 1.0 - fwd_d1[i] / _DESC_BITS)
        for i in np.flatnonzero(passes)
    ]


def extract_features(
    img: GrayRaster,
    mask: Optional[ValidityMask] = None,
    cfg: MatcherConfig = MatcherConfig(),
) -> ImageFeatures:
    """Detect and describe in one pass."""
    kps = detect_keypoints(img, mask, threshold=cfg.threshold, max_count=cfg.max_count)
    descs = compute_descriptors(img, kps)
    return ImageFeatures(tuple(kps), tuple(descs))


def match_feature_sets(
    fa: ImageFeatures, fb: ImageFeatures, cfg: MatcherConfig = MatcherConfig()
) -> list[MatchPair]:
    """Match two described images and return point correspondences."""
    idx = match_descriptors(fa.descriptors, fb.descriptors, cfg.ratio, cfg.cross_check)
    return [
        MatchPair(fa.keypoints[m.index_a].pos, fb.keypoints[m.index_b].pos, m.confidence)
        for m in idx
    ]


def match_images(
    a: GrayRaster,
    b: GrayRaster,
    cfg: MatcherConfig = MatcherConfig(),
    mask_a: Optional[ValidityMask] = None,
) -> list[MatchPair]:
    """Full detect/describe/match composition for one image pair.

    With cfg.matcher == "external" both rasters are written to temporary
    PNG files and matched through the external bridge process instead.
    """
    if cfg.matcher == "external":
        from wildloc.extmatch import match_rasters_external

        return match_rasters_external(a, b, cfg)
    fa = extract_features(a, mask_a, cfg)
    fb = extract_features(b, None, cfg)
    return match_feature_sets(fa, fb, cfg)
