"""Mixing operators, box sampling, and label weights."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixaug import (
    BoxRegion,
    MixConfig,
    apply_mix,
    area_ratio_labels,
    cutmix,
    cutout,
    mix_result_arrays,
    mixup,
    sample_box,
    sample_lambda,
    semantic_ratio_labels,
    snapmix_image,
    substream,
    transform_patch,
)
from oracles import box_mass_loop, cutmix_loop, cutout_loop, mixup_loop, snapmix_loop


def _images(rng, n=2, channels=3, size=8):
    return [rng.random((channels, size, size)) for _ in range(n)]


# ---------------------------------------------------------------------------
# lambda sampling


def test_sample_lambda_moments():
    # [DERIVED] Beta(5, 5): mean 1/2, variance ab/((a+b)^2 (a+b+1)) =
    # 25/(100*11) = 1/44. 40000 draws put the sample stats well inside
    # +/- 0.01 of both.
    rng = np.random.default_rng(11)
    draws = np.array([sample_lambda(5.0, rng) for _ in range(40000)])
    assert abs(draws.mean() - 0.5) < 0.01
    assert abs(draws.var() - 1 / 44) < 0.005
    assert draws.min() >= 0.0 and draws.max() <= 1.0


def test_sample_lambda_rejects_bad_alpha():
    rng = np.random.default_rng(0)
    for alpha in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            sample_lambda(alpha, rng)


# ---------------------------------------------------------------------------
# box sampling


def test_sample_box_zero_lambda_is_empty():
    box = sample_box(0.0, 32, 32, np.random.default_rng(3))
    assert box.is_empty
    assert box.realized_ratio == 0.0


def test_sample_box_full_lambda_is_full_image():
    box = sample_box(1.0, 32, 32, np.random.default_rng(3))
    assert (box.x0, box.y0, box.x1, box.y1) == (0, 0, 32, 32)
    assert box.realized_ratio == 1.0


def test_sample_box_quarter_area_interior():
    # [DERIVED] lam = 0.25 on a 32x32 image: side = round(32 * 0.5) = 16.
    # Whenever the box lands fully inside, the realized ratio is exactly
    # 16*16/1024 = 0.25; clipped draws only shrink it.
    hit_exact = False
    for seed in range(40):
        box = sample_box(0.25, 32, 32, np.random.default_rng(seed))
        assert box.realized_ratio <= 0.25 + 1e-12
        if box.width == 16 and box.height == 16:
            assert box.realized_ratio == 0.25
            hit_exact = True
    assert hit_exact


def test_sample_box_consumes_rng_independent_of_lambda():
    # The center is drawn even for degenerate lambdas, so downstream draws
    # stay aligned across different lambda values.
    tails = []
    for lam in (0.0, 0.3, 1.0):
        rng = np.random.default_rng(77)
        sample_box(lam, 16, 16, rng)
        tails.append(rng.random(4))
    assert np.array_equal(tails[0], tails[1])
    assert np.array_equal(tails[1], tails[2])


def test_sample_box_deterministic():
    a = sample_box(0.4, 24, 24, np.random.default_rng(5))
    b = sample_box(0.4, 24, 24, np.random.default_rng(5))
    assert a == b


@settings(max_examples=100, deadline=None)
@given(
    lam=st.floats(0.0, 1.0, allow_nan=False),
    width=st.integers(1, 40),
    height=st.integers(1, 40),
    seed=st.integers(0, 2**16),
)
def test_sample_box_always_within_bounds(lam, width, height, seed):
    box = sample_box(lam, width, height, np.random.default_rng(seed))
    assert 0 <= box.x0 <= box.x1 <= width
    assert 0 <= box.y0 <= box.y1 <= height
    assert box.realized_ratio == box.area() / (width * height)


# ---------------------------------------------------------------------------
# pixel operators vs oracles


def test_mixup_matches_loop_oracle(rng):
    a, b = _images(rng)
    res = mixup(a, b, 0.3, label_a=1, label_b=2)
    np.testing.assert_allclose(res.image, mixup_loop(a, b, 0.3), atol=1e-15)
    assert (res.rho_a, res.rho_b) == (0.3, 0.7)
    assert res.rho_a + res.rho_b == 1.0
    assert res.box_a is None and res.box_b is None


def test_cutmix_matches_loop_oracle(rng):
    a, b = _images(rng)
    box = BoxRegion.from_corners(2, 1, 7, 5, 8, 8)
    res = cutmix(a, b, box, label_a=0, label_b=1)
    assert np.array_equal(res.image, cutmix_loop(a, b, (2, 1, 7, 5)))
    # [DERIVED] 5*4 box on 8x8 = 20/64 = 0.3125 pasted share.
    assert res.rho_b == 20 / 64
    assert res.rho_a == 1 - 20 / 64


def test_cutout_matches_loop_oracle(rng):
    (a,) = _images(rng, n=1)
    box = BoxRegion.from_corners(0, 0, 3, 3, 8, 8)
    res = cutout(a, box, label_a=4)
    assert np.array_equal(res.image, cutout_loop(a, (0, 0, 3, 3)))
    assert (res.rho_a, res.rho_b) == (1.0, 0.0)
    assert res.label_a == 4 and res.label_b == 4


def test_snapmix_matches_loop_oracle(rng):
    a, b = _images(rng)
    box_a = BoxRegion.from_corners(1, 2, 6, 7, 8, 8)
    box_b = BoxRegion.from_corners(0, 0, 3, 4, 8, 8)
    out = snapmix_image(a, box_a, b, box_b)
    np.testing.assert_allclose(out, snapmix_loop(a, b, (1, 2, 6, 7), (0, 0, 3, 4)), atol=1e-12)


def test_snapmix_untouched_outside_box(rng):
    a, b = _images(rng)
    box_a = BoxRegion.from_corners(2, 2, 5, 6, 8, 8)
    box_b = BoxRegion.from_corners(1, 0, 7, 3, 8, 8)
    out = snapmix_image(a, box_a, b, box_b)
    mask = np.zeros((8, 8), dtype=bool)
    mask[2:6, 2:5] = True
    assert np.array_equal(out[:, ~mask], np.asarray(a)[:, ~mask])
    assert not np.array_equal(out[:, mask], np.asarray(a)[:, mask])


def test_snapmix_same_size_patch_is_bitwise_paste(rng):
    # Same-size crops skip resampling entirely, so the pasted pixels are
    # bit-identical to the source region (the cutmix-equivalence backbone).
    a, b = _images(rng)
    box = BoxRegion.from_corners(2, 3, 6, 7, 8, 8)
    out = snapmix_image(a, box, b, box)
    assert np.array_equal(out[:, 3:7, 2:6], np.asarray(b)[:, 3:7, 2:6])


def test_snapmix_empty_box_returns_copy(rng):
    a, b = _images(rng)
    empty = BoxRegion.from_corners(4, 4, 4, 4, 8, 8)
    full = BoxRegion.full(8, 8)
    for box_a, box_b in [(empty, full), (full, empty), (empty, empty)]:
        out = snapmix_image(a, box_a, b, box_b)
        assert np.array_equal(out, a)
        assert out is not a


def test_transform_patch_identity_and_resize(rng):
    (a,) = _images(rng, n=1)
    box = BoxRegion.from_corners(1, 1, 5, 5, 8, 8)
    same = transform_patch(a, box, 4, 4)
    assert np.array_equal(same, np.asarray(a)[:, 1:5, 1:5])
    grown = transform_patch(a, box, 6, 3)
    assert grown.shape == (3, 3, 6)


# ---------------------------------------------------------------------------
# label weights


def test_area_ratio_labels():
    box = BoxRegion.from_corners(0, 0, 4, 4, 8, 8)
    assert area_ratio_labels(box) == (1 - 0.25, 0.25)


def test_semantic_ratio_labels_hand_case():
    # [DERIVED] uniform 2x2 map (mass 1/4 per cell). box_a covers one cell
    # -> rho_a = 1 - 1/4; box_b covers two cells -> rho_b = 1/2.
    spm = np.full((2, 2), 0.25)
    box_a = BoxRegion.from_corners(0, 0, 1, 1, 2, 2)
    box_b = BoxRegion.from_corners(0, 0, 2, 1, 2, 2)
    rho_a, rho_b = semantic_ratio_labels(spm, box_a, spm, box_b)
    assert rho_a == 0.75
    assert rho_b == 0.5


def test_semantic_ratio_sum_not_constrained(rng):
    # Pasting a background (low-mass) patch over a salient region removes
    # more evidence than it adds: rho_a + rho_b < 1.
    spm_a = np.zeros((4, 4))
    spm_a[0, 0] = 1.0  # all of a's evidence in the erased corner
    spm_b = np.zeros((4, 4))
    spm_b[3, 3] = 1.0  # none of b's evidence in the cut corner
    box = BoxRegion.from_corners(0, 0, 2, 2, 4, 4)
    rho_a, rho_b = semantic_ratio_labels(spm_a, box, spm_b, box)
    assert rho_a == 0.0 and rho_b == 0.0
    assert rho_a + rho_b < 1.0


def test_semantic_ratio_matches_mass_loop(rng):
    spm = rng.random((6, 6))
    spm /= spm.sum()
    box_a = BoxRegion.from_corners(1, 0, 5, 4, 6, 6)
    box_b = BoxRegion.from_corners(2, 2, 6, 6, 6, 6)
    rho_a, rho_b = semantic_ratio_labels(spm, box_a, spm, box_b)
    assert abs((1 - box_mass_loop(spm, (1, 0, 5, 4))) - rho_a) < 1e-12
    assert abs(box_mass_loop(spm, (2, 2, 6, 6)) - rho_b) < 1e-12


def test_semantic_ratio_clamps_to_unit_interval():
    spm = np.full((2, 2), 0.3)  # deliberately over-mass: sums to 1.2
    box = BoxRegion.full(2, 2)
    rho_a, rho_b = semantic_ratio_labels(spm, box, spm, box)
    assert rho_a == 0.0  # 1 - 1.2 clamped up to 0
    assert rho_b == 1.0  # 1.2 clamped down to 1


# ---------------------------------------------------------------------------
# batch application


def _batch(rng, n=6, size=8):
    images = rng.random((n, 3, size, size))
    labels = np.arange(n) % 3
    return images, labels


def test_apply_mix_deterministic_per_stream(rng):
    images, labels = _batch(rng)
    cfg = MixConfig("snapmix", alpha=5.0, label_strategy="area_ratio")
    res1 = apply_mix(images, labels, cfg, substream(9, "mix"))
    res2 = apply_mix(images, labels, cfg, substream(9, "mix"))
    for a, b in zip(res1, res2):
        assert np.array_equal(a.image, b.image)
        assert (a.rho_a, a.rho_b, a.label_a, a.label_b) == (b.rho_a, b.rho_b, b.label_a, b.label_b)


def test_apply_mix_switch_prob_zero_passes_through(rng):
    images, labels = _batch(rng)
    cfg = MixConfig("cutmix", alpha=3.0, switch_prob=0.0)
    results = apply_mix(images, labels, cfg, substream(1, "mix"))
    for i, res in enumerate(results):
        assert np.array_equal(res.image, images[i])
        assert (res.rho_a, res.rho_b) == (1.0, 0.0)
        assert res.label_a == res.label_b == labels[i]


def test_apply_mix_switch_prob_frequency(rng):
    # [DERIVED] with switch_prob = 0.5 over 400 mixup samples the mixed
    # fraction is Binomial(400, .5)/400; 5 sigma ~ 0.125.
    images, labels = _batch(rng, n=400)
    cfg = MixConfig("mixup", alpha=1.0, switch_prob=0.5)
    results = apply_mix(images, labels, cfg, substream(3, "mix"))
    mixed = sum(1 for i, r in enumerate(results) if not np.array_equal(r.image, images[i]))
    assert abs(mixed / 400 - 0.5) < 0.125


def test_apply_mix_partner_is_never_self(rng):
    images, labels = _batch(rng, n=2)
    cfg = MixConfig("mixup", alpha=1.0, switch_prob=1.0)
    results = apply_mix(images, labels, cfg, substream(4, "mix"))
    assert results[0].label_b == labels[1]
    assert results[1].label_b == labels[0]


def test_apply_mix_singleton_batch_warns_and_passes_through(rng, caplog):
    images, labels = _batch(rng, n=1)
    cfg = MixConfig("mixup", alpha=1.0, switch_prob=1.0)
    with caplog.at_level(logging.WARNING, logger="mixaug.augment"):
        results = apply_mix(images, labels, cfg, substream(4, "mix"))
    assert len(results) == 1
    assert np.array_equal(results[0].image, images[0])
    assert (results[0].rho_a, results[0].rho_b) == (1.0, 0.0)
    assert len(caplog.records) == 1


def test_apply_mix_semantic_needs_provider(rng):
    images, labels = _batch(rng)
    cfg = MixConfig("snapmix", alpha=5.0, label_strategy="semantic_ratio")
    with pytest.raises(ValueError):
        apply_mix(images, labels, cfg, substream(4, "mix"))


def test_apply_mix_semantic_weights_in_range(rng):
    images, labels = _batch(rng)
    spms = [np.full((8, 8), 1 / 64) for _ in range(len(images))]
    cfg = MixConfig("snapmix", alpha=5.0, switch_prob=1.0, label_strategy="semantic_ratio")
    results = apply_mix(images, labels, cfg, substream(8, "mix"), spm_provider=spms.__getitem__)
    for res in results:
        assert 0.0 <= res.rho_a <= 1.0
        assert 0.0 <= res.rho_b <= 1.0


def test_cutmix_and_symmetric_snapmix_consume_identical_rng(rng):
    # Same coin, same partner, same box draws, identity resize: the two
    # configurations must agree bit for bit, images and weights alike.
    images, labels = _batch(rng, n=8)
    res_cm = apply_mix(
        images, labels, MixConfig("cutmix", alpha=3.0, switch_prob=0.5), substream(21, "mix")
    )
    res_sm = apply_mix(
        images,
        labels,
        MixConfig("snapmix", alpha=3.0, switch_prob=0.5, label_strategy="area_ratio", symmetric=True),
        substream(21, "mix"),
    )
    for cm, sm in zip(res_cm, res_sm):
        assert np.array_equal(cm.image, sm.image)
        assert cm.rho_a == sm.rho_a and cm.rho_b == sm.rho_b
        assert cm.label_a == sm.label_a and cm.label_b == sm.label_b


def test_mix_result_arrays_stacks(rng):
    images, labels = _batch(rng, n=4)
    cfg = MixConfig("mixup", alpha=1.0, switch_prob=1.0)
    results = apply_mix(images, labels, cfg, substream(6, "mix"))
    imgs, la, lb, ra, rb = mix_result_arrays(results)
    assert imgs.shape == images.shape
    assert la.shape == lb.shape == ra.shape == rb.shape == (4,)
    np.testing.assert_allclose(ra + rb, 1.0, atol=1e-12)


def test_mix_config_validation():
    with pytest.raises(ValueError):
        MixConfig("blend", alpha=1.0)  # unknown strategy
    with pytest.raises(ValueError):
        MixConfig("mixup", alpha=0.0)  # alpha must be positive
    with pytest.raises(ValueError):
        MixConfig("mixup", alpha=1.0, switch_prob=1.5)
    with pytest.raises(ValueError):
        MixConfig("cutmix", alpha=1.0, label_strategy="semantic_ratio")  # snapmix-only


def test_box_region_validation():
    with pytest.raises(ValueError):
        BoxRegion.from_corners(-1, 0, 4, 4, 8, 8)
    with pytest.raises(ValueError):
        BoxRegion.from_corners(0, 0, 9, 4, 8, 8)
    with pytest.raises(ValueError):
        BoxRegion.from_corners(5, 0, 4, 4, 8, 8)
