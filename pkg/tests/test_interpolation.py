"""Align-corners bilinear resize."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixaug import bilinear_resize
from oracles import bilinear_loop


def test_two_point_row_hand_case():
    # [DERIVED] endpoints 0 and 1 resized to 4 columns: positions
    # j*(2-1)/(4-1) = 0, 1/3, 2/3, 1 -> values equal the positions.
    out = bilinear_resize(np.array([[0.0, 1.0], [0.0, 1.0]]), 2, 4)
    expected = np.array([[0.0, 1 / 3, 2 / 3, 1.0], [0.0, 1 / 3, 2 / 3, 1.0]])
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)


def test_single_output_pixel_is_midpoint():
    # [DERIVED] a 1-wide destination has no corner pair to pin, so it reads
    # the source midpoint: (3-1)/2 = 1 -> exactly the middle column.
    src = np.array([[1.0, 5.0, 9.0]])
    out = bilinear_resize(src, 1, 1)
    assert out.shape == (1, 1)
    assert out[0, 0] == 5.0


def test_identity_size_is_exact_copy():
    rng = np.random.default_rng(0)
    src = rng.random((4, 6))
    out = bilinear_resize(src, 4, 6)
    assert np.array_equal(out, src)
    out[0, 0] = -1.0
    assert src[0, 0] != -1.0  # copy, not a view


def test_matches_scalar_loop_oracle():
    rng = np.random.default_rng(7)
    for src_h, src_w, out_h, out_w in [(2, 2, 5, 3), (4, 7, 7, 4), (3, 5, 8, 8), (6, 6, 2, 9)]:
        src = rng.random((src_h, src_w))
        np.testing.assert_allclose(
            bilinear_resize(src, out_h, out_w), bilinear_loop(src, out_h, out_w), atol=1e-12
        )


def test_leading_axes_broadcast_like_per_plane_calls():
    rng = np.random.default_rng(8)
    stack = rng.random((3, 4, 5))
    out = bilinear_resize(stack, 9, 7)
    assert out.shape == (3, 9, 7)
    for ch in range(3):
        np.testing.assert_allclose(out[ch], bilinear_resize(stack[ch], 9, 7), atol=0)


def test_constant_image_stays_constant():
    out = bilinear_resize(np.full((3, 3), 0.4), 10, 11)
    np.testing.assert_allclose(out, 0.4, atol=1e-15)


def test_rejects_empty_output():
    with pytest.raises(ValueError):
        bilinear_resize(np.ones((2, 2)), 0, 3)


@settings(max_examples=60, deadline=None)
@given(
    src_h=st.integers(1, 6),
    src_w=st.integers(1, 6),
    out_h=st.integers(1, 12),
    out_w=st.integers(1, 12),
    seed=st.integers(0, 2**16),
)
def test_output_bounded_by_input_extremes(src_h, src_w, out_h, out_w, seed):
    src = np.random.default_rng(seed).random((src_h, src_w))
    out = bilinear_resize(src, out_h, out_w)
    assert out.shape == (out_h, out_w)
    assert out.min() >= src.min() - 1e-12
    assert out.max() <= src.max() + 1e-12
