"""Seeded augmentation: determinism, geometry tracking, and mixup arithmetic."""

import numpy as np
import pytest

from holoprep import (
    Annotation,
    AugmentationPolicy,
    BBox,
    Raster,
    augment,
    classification_policy_default,
    detection_policy_default,
    maybe_mixup,
    mixup,
)


def random_raster(rng, w=64, h=64, channels=1) -> Raster:
    return Raster(rng.integers(0, 256, (h, w, channels), dtype=np.uint8))


class TestPolicies:
    def test_detection_defaults(self):
        p = detection_policy_default()
        assert p.max_rotation == 45.0
        assert p.vflip_p == 0.5
        assert p.hflip_p == 0.0
        assert p.mixup_p == 0.10
        assert p.translate_max == 0.0
        assert p.crop_keep_range == (1.0, 1.0)
        assert p.brightness == p.contrast == p.saturation == p.hue == 0.0

    def test_classification_defaults(self):
        p = classification_policy_default()
        assert p.max_rotation == 40.0
        assert p.hflip_p == 0.5
        assert p.vflip_p == 0.0
        assert p.translate_max == 0.20
        assert p.crop_keep_range == (0.80, 1.00)
        assert p.brightness == p.contrast == p.saturation == 0.20
        assert p.hue == 0.10
        assert p.mixup_p == 0.0

    def test_invalid_probability(self):
        with pytest.raises(ValueError, match="hflip_p"):
            AugmentationPolicy(hflip_p=1.5)

    def test_invalid_crop_range(self):
        with pytest.raises(ValueError, match="crop_keep_range"):
            AugmentationPolicy(crop_keep_range=(0.9, 0.5))


class TestAugmentDeterminism:
    def test_identity_policy_is_byte_identity(self):
        rng = np.random.default_rng(0)
        r = random_raster(rng, channels=3)
        anns = (Annotation(BBox(0.5, 0.5, 0.2, 0.2), 1),)
        result = augment(r, anns, AugmentationPolicy(), draw_index=0)
        assert np.array_equal(result.raster.pixels, r.pixels)
        assert result.annotations == anns
        assert result.dropped == 0

    def test_same_draw_is_byte_identical(self):
        rng = np.random.default_rng(1)
        r = random_raster(rng, channels=3)
        anns = (Annotation(BBox(0.5, 0.5, 0.3, 0.3), 0),)
        policy = classification_policy_default(seed=99)
        a = augment(r, anns, policy, draw_index=7)
        b = augment(r, anns, policy, draw_index=7)
        assert np.array_equal(a.raster.pixels, b.raster.pixels)
        assert a.annotations == b.annotations

    def test_different_draws_differ(self):
        rng = np.random.default_rng(2)
        r = random_raster(rng)
        policy = classification_policy_default(seed=99)
        a = augment(r, (), policy, draw_index=0)
        b = augment(r, (), policy, draw_index=1)
        assert not np.array_equal(a.raster.pixels, b.raster.pixels)

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(3)
        r = random_raster(rng)
        a = augment(r, (), classification_policy_default(seed=1), draw_index=0)
        b = augment(r, (), classification_policy_default(seed=2), draw_index=0)
        assert not np.array_equal(a.raster.pixels, b.raster.pixels)


class TestAugmentGeometry:
    def test_forced_vflip_matches_analytic_flip(self):
        rng = np.random.default_rng(4)
        r = random_raster(rng, 32, 24)
        policy = AugmentationPolicy(vflip_p=1.0)
        ann = Annotation(BBox(0.3, 0.2, 0.1, 0.1), 0)
        result = augment(r, (ann,), policy, draw_index=0)
        assert np.array_equal(result.raster.pixels, r.pixels[::-1, :])
        got = result.annotations[0].box
        assert got.cx == pytest.approx(0.3)
        assert got.cy == pytest.approx(0.8)

    def test_forced_hflip(self):
        rng = np.random.default_rng(5)
        r = random_raster(rng, 32, 24)
        result = augment(r, (Annotation(BBox(0.3, 0.2, 0.1, 0.1), 0),), AugmentationPolicy(hflip_p=1.0), 0)
        assert np.array_equal(result.raster.pixels, r.pixels[:, ::-1])
        assert result.annotations[0].box.cx == pytest.approx(0.7)

    def test_dims_and_channels_preserved(self):
        rng = np.random.default_rng(6)
        for channels in (1, 3):
            r = random_raster(rng, 50, 40, channels)
            policy = classification_policy_default(seed=5)
            result = augment(r, (), policy, draw_index=3)
            assert result.raster.pixels.shape == (40, 50, channels)

    def test_grey_raster_keeps_one_channel_under_jitter(self):
        rng = np.random.default_rng(7)
        r = random_raster(rng, 30, 30, 1)
        policy = AugmentationPolicy(brightness=0.2, contrast=0.2, saturation=0.2, hue=0.1, seed=8)
        result = augment(r, (), policy, draw_index=0)
        assert result.raster.channels == 1

    def test_marked_pixel_containment(self):
        # a bright mark at an annotation's center must stay inside the
        # transformed annotation (1 px tolerance) for every surviving draw
        policy = AugmentationPolicy(
            max_rotation=45.0, hflip_p=0.5, vflip_p=0.5, translate_max=0.2,
            crop_keep_range=(0.8, 1.0), seed=123,
        )
        size = 80
        px = np.zeros((size, size), dtype=np.uint8)
        px[40, 28] = 255
        # box centered on the mark: center (28.5, 40.5) in continuous coords
        box = BBox(28.5 / size, 40.5 / size, 16 / size, 16 / size)
        raster = Raster(px)
        ann = Annotation(box, 0)
        survived = checked = 0
        for draw in range(200):
            result = augment(raster, (ann,), policy, draw)
            if not result.annotations:
                continue
            survived += 1
            out = result.raster.pixels[:, :, 0]
            peak = int(out.max())
            if peak < 64:  # mark cropped away or diluted past recognition
                continue
            ys, xs = np.nonzero(out == peak)
            got = result.annotations[0].box
            x_lo, x_hi = (got.x0 - 1 / size) * size, (got.x1 + 1 / size) * size
            y_lo, y_hi = (got.y0 - 1 / size) * size, (got.y1 + 1 / size) * size
            assert ((xs + 0.5 >= x_lo) & (xs + 0.5 <= x_hi)).any()
            assert ((ys + 0.5 >= y_lo) & (ys + 0.5 <= y_hi)).any()
            checked += 1
        assert survived >= 180
        assert checked >= 150

    def test_annotation_lost_to_crop_is_counted(self):
        rng = np.random.default_rng(9)
        r = random_raster(rng, 100, 100)
        # tiny box in the far corner vanishes under a center-ish crop
        ann = Annotation(BBox(0.01, 0.01, 0.02, 0.02), 0)
        dropped_seen = False
        policy = AugmentationPolicy(crop_keep_range=(0.5, 0.5), seed=11)
        for draw in range(50):
            result = augment(r, (ann,), policy, draw)
            if result.dropped:
                dropped_seen = True
                assert not result.annotations
        assert dropped_seen

    def test_rejects_pixel_space_annotations(self):
        from holoprep import Space

        rng = np.random.default_rng(10)
        r = random_raster(rng)
        ann = Annotation(BBox(5, 5, 2, 2, Space.PIXEL), 0)
        with pytest.raises(ValueError, match="normalized"):
            augment(r, (ann,), AugmentationPolicy(), 0)


class TestMixup:
    def test_lambda_one_returns_first_exactly(self):
        rng = np.random.default_rng(11)
        a, b = random_raster(rng), random_raster(rng)
        assert mixup(a, b, 1.0) is a

    def test_lambda_zero_returns_second_exactly(self):
        rng = np.random.default_rng(12)
        a, b = random_raster(rng), random_raster(rng)
        assert mixup(a, b, 0.0) is b

    def test_midpoint_blend(self):
        a = Raster(np.full((10, 10), 100, dtype=np.uint8))
        b = Raster(np.full((10, 10), 200, dtype=np.uint8))
        assert np.all(mixup(a, b, 0.5).pixels == 150)

    def test_convexity_within_one_grey_level(self):
        rng = np.random.default_rng(13)
        a, b = random_raster(rng, 16, 16), random_raster(rng, 16, 16)
        out = mixup(a, b, 0.37).pixels.astype(int)
        lo = np.minimum(a.pixels, b.pixels).astype(int) - 1
        hi = np.maximum(a.pixels, b.pixels).astype(int) + 1
        assert np.all(out >= lo) and np.all(out <= hi)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            mixup(Raster.zeros(4, 4), Raster.zeros(5, 4), 0.5)

    def test_maybe_mixup_trigger_rate(self):
        rng = np.random.default_rng(14)
        a, b = random_raster(rng, 8, 8), random_raster(rng, 8, 8)
        policy = AugmentationPolicy(mixup_p=0.10, seed=77)
        triggers = sum(maybe_mixup(policy, draw, a, b)[1] is not None for draw in range(2000))
        assert 140 <= triggers <= 260  # ~10% of 2000

    def test_maybe_mixup_lambda_range(self):
        rng = np.random.default_rng(15)
        a, b = random_raster(rng, 8, 8), random_raster(rng, 8, 8)
        policy = AugmentationPolicy(mixup_p=1.0, seed=78)
        for draw in range(100):
            _, lam = maybe_mixup(policy, draw, a, b)
            assert 0.3 <= lam <= 0.7

    def test_maybe_mixup_does_not_perturb_augment(self):
        rng = np.random.default_rng(16)
        r = random_raster(rng)
        policy = classification_policy_default(seed=5)
        before = augment(r, (), policy, 0)
        maybe_mixup(policy, 0, r, r)
        after = augment(r, (), policy, 0)
        assert np.array_equal(before.raster.pixels, after.raster.pixels)
