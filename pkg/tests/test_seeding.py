"""Named substream behavior."""

import numpy as np
import pytest

from mixaug import substream


def test_same_seed_and_name_reproduce():
    a = substream(123, "mix").random(8)
    b = substream(123, "mix").random(8)
    assert np.array_equal(a, b)


def test_different_names_decorrelate():
    a = substream(123, "mix").random(8)
    b = substream(123, "order").random(8)
    assert not np.array_equal(a, b)


def test_different_seeds_decorrelate():
    a = substream(1, "mix").random(8)
    b = substream(2, "mix").random(8)
    assert not np.array_equal(a, b)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        substream(-1, "mix")
