"""Tests for the segment-test detector, binary descriptors, and matching."""

import numpy as np
import pytest

from wildloc.errors import OutOfBounds
from wildloc.features import (
    Descriptor,
    MatcherConfig,
    compute_descriptors,
    detect_keypoints,
    extract_features,
    match_descriptors,
    match_images,
)
from wildloc.raster import GrayRaster, ValidityMask, rotate_expand


def _texture(seed: int, cells: int = 32, cell_px: int = 8) -> GrayRaster:
    """Deterministic blocky texture with corners at every cell junction."""
    rng = np.random.default_rng(seed)
    blocks = rng.integers(0, 256, size=(cells, cells), dtype=np.uint8)
    return GrayRaster(np.kron(blocks, np.ones((cell_px, cell_px), dtype=np.uint8)))


def _flip_bits(desc: Descriptor, positions) -> Descriptor:
    bits = np.unpackbits(desc.bits.copy())
    for p in positions:
        bits[p] ^= 1
    return Descriptor(np.packbits(bits))


class TestDetect:
    def test_uniform_image_has_no_corners(self):
        img = GrayRaster(np.full((100, 100), 128, dtype=np.uint8))
        assert detect_keypoints(img, threshold=20) == []

    def test_white_square_corners_found(self):
        px = np.zeros((100, 100), dtype=np.uint8)
        px[47:52, 47:52] = 255  # 5x5 square, corners at (47,47)..(51,51)
        kps = detect_keypoints(GrayRaster(px), threshold=20)
        corners = [(47, 47), (51, 47), (47, 51), (51, 51)]
        hit = 0
        for cx, cy in corners:
            if any(abs(k.pos.x - cx) <= 2 and abs(k.pos.y - cy) <= 2 for k in kps):
                hit += 1
        assert hit >= 4

    def test_max_count_truncates_to_global_best(self):
        img = _texture(21)
        all_kps = detect_keypoints(img, threshold=20, max_count=5000)
        top = detect_keypoints(img, threshold=20, max_count=1)
        assert len(top) == 1
        assert top[0].score == max(k.score for k in all_kps)

    def test_sorted_by_score(self):
        kps = detect_keypoints(_texture(22), threshold=20)
        scores = [k.score for k in kps]
        assert scores == sorted(scores, reverse=True)

    def test_border_margin_respected(self):
        kps = detect_keypoints(_texture(23), threshold=10, max_count=10000)
        for k in kps:
            assert 16 <= k.pos.x <= 255 - 16
            assert 16 <= k.pos.y <= 255 - 16

    def test_mask_excludes_fill_regions(self):
        img = _texture(24)
        bits = np.ones((img.height, img.width), dtype=bool)
        bits[:, : img.width // 2] = False
        mask = ValidityMask(bits)
        kps = detect_keypoints(img, mask, threshold=10, max_count=10000)
        assert kps
        for k in kps:
            x, y = int(k.pos.x), int(k.pos.y)
            patch = bits[y - 15 : y + 16, x - 15 : x + 16]
            assert patch.all()

    def test_rotation_mask_soundness(self):
        rot, mask = rotate_expand(_texture(25), 30.0)
        kps = detect_keypoints(rot, mask, threshold=10, max_count=10000)
        assert kps
        for k in kps:
            x, y = int(k.pos.x), int(k.pos.y)
            assert mask.bits[y - 15 : y + 16, x - 15 : x + 16].all()


class TestDescriptors:
    def test_deterministic(self):
        img = _texture(31)
        kps = detect_keypoints(img, threshold=20, max_count=50)
        d1 = compute_descriptors(img, kps)
        d2 = compute_descriptors(img, kps)
        for a, b in zip(d1, d2):
            assert (a.bits == b.bits).all()

    def test_border_keypoint_rejected(self):
        from wildloc.features import Keypoint
        from wildloc.geo import PixelPoint

        img = GrayRaster(np.zeros((100, 100), dtype=np.uint8))
        with pytest.raises(OutOfBounds):
            compute_descriptors(img, [Keypoint(PixelPoint(5, 5), 1.0)])

    def test_uniform_patch_all_bits_zero(self):
        from wildloc.features import Keypoint
        from wildloc.geo import PixelPoint

        img = GrayRaster(np.full((64, 64), 77, dtype=np.uint8))
        (d,) = compute_descriptors(img, [Keypoint(PixelPoint(32, 32), 1.0)])
        # equal intensities: "first < second" is false everywhere
        assert (d.bits == 0).all()


class TestMatchDescriptors:
    def test_self_match_identity(self):
        img = _texture(41)
        feats = extract_features(img, cfg=MatcherConfig(max_count=200))
        # keep only distinct descriptors so the identity match is unambiguous
        seen = set()
        descs = []
        for d in feats.descriptors:
            key = d.bits.tobytes()
            if key not in seen:
                seen.add(key)
                descs.append(d)
        matches = match_descriptors(descs, descs, ratio=0.8, cross_check=True)
        assert len(matches) == len(descs)
        for m in matches:
            assert m.index_a == m.index_b
            assert m.confidence == 1.0

    def test_ratio_test_accepts_distinct_neighbor(self):
        a = Descriptor(np.zeros(32, dtype=np.uint8))
        b1 = _flip_bits(a, range(10))          # distance 10
        b2 = _flip_bits(a, range(100, 200))    # distance 100
        matches = match_descriptors([a], [b1, b2], ratio=0.8, cross_check=False)
        assert len(matches) == 1
        assert matches[0].index_b == 0
        assert matches[0].distance == 10

    def test_ratio_test_rejects_ambiguous_neighbor(self):
        a = Descriptor(np.zeros(32, dtype=np.uint8))
        b1 = _flip_bits(a, range(10))          # distance 10
        b2 = _flip_bits(a, range(100, 111))    # distance 11
        matches = match_descriptors([a], [b1, b2], ratio=0.8, cross_check=False)
        assert matches == []

    def test_empty_inputs(self):
        assert match_descriptors([], [], 0.8, True) == []

    def test_cross_check_symmetry(self):
        fa = extract_features(_texture(42), cfg=MatcherConfig(max_count=300))
        fb = extract_features(_texture(43), cfg=MatcherConfig(max_count=300))
        fwd = match_descriptors(fa.descriptors, fb.descriptors, 0.9, cross_check=True)
        bwd = match_descriptors(fb.descriptors, fa.descriptors, 0.9, cross_check=True)
        fwd_pairs = {(m.index_a, m.index_b) for m in fwd}
        bwd_pairs = {(m.index_b, m.index_a) for m in bwd}
        assert fwd_pairs == bwd_pairs


class TestMatchImages:
    def test_identical_images_match_in_place(self):
        img = _texture(51)
        pairs = match_images(img, img)
        assert len(pairs) > 50
        for p in pairs:
            assert abs(p.a.x - p.b.x) < 1.0
            assert abs(p.a.y - p.b.y) < 1.0

    def test_translation_recovered(self):
        img = _texture(52)
        shifted = np.zeros_like(img.pixels)
        shifted[:, 10:] = img.pixels[:, :-10]
        pairs = match_images(img, GrayRaster(shifted))
        assert len(pairs) > 20
        good = sum(
            1
            for p in pairs
            if abs((p.b.x - p.a.x) - 10) <= 1 and abs(p.b.y - p.a.y) <= 1
        )
        assert good >= len(pairs) * 0.5

    def test_uniform_image_yields_nothing(self):
        flat = GrayRaster(np.full((128, 128), 90, dtype=np.uint8))
        assert match_images(flat, _texture(53)) == []

    def test_not_rotation_invariant(self):
        img = _texture(54)
        rot, _ = rotate_expand(img, 30.0)
        aligned = len(match_images(img, img))
        rotated = len(match_images(img, rot))
        assert rotated < aligned

    def test_determinism(self):
        img_a = _texture(55)
        img_b = _texture(56)
        p1 = match_images(img_a, img_b)
        p2 = match_images(img_a, img_b)
        assert p1 == p2
