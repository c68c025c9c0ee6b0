"""Projective transform estimation from point correspondences.

estimate_dlt solves the homogeneous linear system after Hartley
normalization (centroid at the origin, mean distance sqrt(2)); without the
normalization the system is numerically unusable at 1000+ px coordinates.
ransac_homography wraps it in seeded random sample consensus with an
adaptive iteration budget and a final refit on the inlier set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wildloc.errors import (
    DegenerateConfiguration,
    InsufficientPairs,
    NoModelFound,
    PointAtInfinity,
)
from wildloc.features import MatchPair
from wildloc.geo import ImageDims, PixelPoint

_COND_TOL = 1e-10     # relative conditioning threshold on the normalized system
_W_EPS = 1e-12        # homogeneous scale below which a point is at infinity
_AREA_EPS = 1e-9      # collinearity test for minimal samples


@dataclass(frozen=True)
class Homography:
    """3x3 projective map from drone-image pixels to tile pixels.

    Stored with m[2][2] = 1 when that entry is usable, otherwise with unit
    Frobenius norm; either way the map is defined only up to scale.
    """

    m: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.m, dtype=np.float64)
        if a.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got {a.shape}")
        if abs(a[2, 2]) > _W_EPS:
            a = a / a[2, 2]
        else:
            a = a / np.linalg.norm(a)
        a.flags.writeable = False
        object.__setattr__(self, "m", a)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))


@dataclass(frozen=True)
class RansacReport:
    """Consensus summary for a fitted model."""

    inlier_indices: tuple[int, ...]
    iterations_run: int
    reprojection_rms: float


def _as_arrays(pairs: Sequence[MatchPair]) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([(p.a.x, p.a.y) for p in pairs], dtype=np.float64)
    b = np.array([(p.b.x, p.b.y) for p in pairs], dtype=np.float64)
    return a, b


def _normalizer(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to the origin, mean distance sqrt(2)."""
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if d < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(2.0) / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _apply_t(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts * t[0, 0] + t[:2, 2]


def _fit_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT on (N, 2) arrays; returns the 3x3 matrix."""
    ta = _normalizer(src)
    tb = _normalizer(dst)
    an = _apply_t(ta, src)
    bn = _apply_t(tb, dst)

    n = src.shape[0]
    x, y = an[:, 0], an[:, 1]
    u, v = bn[:, 0], bn[:, 1]
    zeros = np.zeros(n)
    ones = np.ones(n)
    rows = np.empty((2 * n, 9))
    rows[0::2] = np.column_stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u])
    rows[1::2] = np.column_stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v])

    _, svals, vt = np.linalg.svd(rows)
    # A unique solution needs rank 8: the 8th singular value must be clearly
    # nonzero (collinear or coincident configurations drop it to ~0).
    if svals[7] <= _COND_TOL * svals[0]:
        raise DegenerateConfiguration("correspondences do not determine a unique homography")
    hn = vt[-1].reshape(3, 3)
    return np.linalg.inv(tb) @ hn @ ta


def estimate_dlt(pairs: Sequence[MatchPair]) -> Homography:
    """Least-squares homography through all given correspondences."""
    if len(pairs) < 4:
        raise InsufficientPairs(f"need at least 4 pairs, got {len(pairs)}")
    src, dst = _as_arrays(pairs)
    return Homography(_fit_dlt(src, dst))


def _project(m: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply a homography matrix to (N, 2) points; infinities become nan."""
    ph = np.column_stack([pts, np.ones(len(pts))])
    q = ph @ m.T
    w = q[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = q[:, :2] / w[:, None]
    out[np.abs(w) < _W_EPS] = np.nan
    return out


def _forward_errors(m: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    proj = _project(m, src)
    err = np.sqrt(((proj - dst) ** 2).sum(axis=1))
    return np.where(np.isfinite(err), err, np.inf)


def _has_collinear_triple(pts: np.ndarray) -> bool:
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        v1 = pts[j] - pts[i]
        v2 = pts[k] - pts[i]
        if 0.5 * abs(v1[0] * v2[1] - v1[1] * v2[0]) < _AREA_EPS:
            return True
    return False


def ransac_homography(
    pairs: Sequence[MatchPair],
    threshold_px: float = 5.0,
    max_iters: int = 2000,
    confidence: float = 0.995,
    seed: int = 0,
) -> tuple[Homography, RansacReport]:
    """Robust homography fit by seeded random sample consensus.

    Scores candidates by forward reprojection error (drone -> tile),
    adapts the iteration count to the best inlier ratio seen so far, and
    refits on the full inlier set. Identical arguments give bit-identical
    results across runs.
    """
    if len(pairs) < 4:
        raise InsufficientPairs(f"need at least 4 pairs, got {len(pairs)}")
    if threshold_px <= 0:
        raise ValueError("threshold_px must be > 0")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")

    src, dst = _as_arrays(pairs)
    n = len(pairs)
    rng = np.random.default_rng(seed)

    best_count = 0
    best_mask: np.ndarray | None = None
    best_m: np.ndarray | None = None
    needed = max_iters
    iters = 0
    while iters < min(max_iters, needed):
        iters += 1
        idx = rng.choice(n, size=4, replace=False)
        if _has_collinear_triple(src[idx]):
            continue
        try:
            m = _fit_dlt(src[idx], dst[idx])
        except DegenerateConfiguration:
            continue
        mask = _forward_errors(m, src, dst) < threshold_px
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask, best_m = count, mask, m
            w = count / n
            if w >= 1.0:
                break
            denom = math.log(1.0 - w**4)
            if denom < 0.0:
                needed = min(max_iters, math.ceil(math.log(1.0 - confidence) / denom))

    if best_count < 4 or best_mask is None or best_m is None:
        raise NoModelFound(f"no sample reached 4 inliers in {iters} iterations")

    try:
        refit = _fit_dlt(src[best_mask], dst[best_mask])
    except DegenerateConfiguration:
        refit = best_m
    errors = _forward_errors(refit, src, dst)
    final_mask = errors < threshold_px
    if int(final_mask.sum()) < 4:
        # Refit drifted off the consensus set; fall back to the sample model.
        refit = best_m
        errors = _forward_errors(refit, src, dst)
        final_mask = errors < threshold_px

    inliers = np.flatnonzero(final_mask)
    rms = float(np.sqrt(np.mean(errors[final_mask] ** 2)))
    report = RansacReport(tuple(int(i) for i in inliers), iters, rms)
    return Homography(refit), report


def apply_h(h: Homography, p: PixelPoint) -> PixelPoint:
    """Map one point through the homography."""
    v = h.m @ np.array([p.x, p.y, 1.0])
    if abs(v[2]) < _W_EPS:
        raise PointAtInfinity(f"({p.x}, {p.y}) maps to infinity")
    return PixelPoint(float(v[0] / v[2]), float(v[1] / v[2]))


def transform_quad(h: Homography, dims: ImageDims) -> list[PixelPoint]:
    """Images of the four image corners, clockwise from the origin."""
    w, hgt = float(dims.width), float(dims.height)
    corners = (PixelPoint(0, 0), PixelPoint(w, 0), PixelPoint(w, hgt), PixelPoint(0, hgt))
    return [apply_h(h, c) for c in corners]
