"""Corner-aligned bilinear resampling.

One resize convention is used everywhere (patch resizing and activation-map
upsampling alike): output sample j on an axis of source length s and target
length d maps to source coordinate j * (s - 1) / (d - 1), so the first and
last samples land exactly on the source corners. A target axis of length 1
samples the source midpoint. Resizing to the source size returns an exact
copy.
"""

from __future__ import annotations

import numpy as np

__all__ = ["bilinear_resize"]


def _axis_weights(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gather indices (lo, hi) and the hi-side fraction for one axis."""
    if dst == 1:
        pos = np.array([0.5 * (src - 1)], dtype=np.float64)
    else:
        pos = np.arange(dst, dtype=np.float64) * ((src - 1) / (dst - 1))
    lo = np.minimum(np.floor(pos).astype(np.intp), src - 1)
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, pos - lo


def bilinear_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize the trailing two axes of `arr` to (out_h, out_w).

    Parameters
    ----------
    arr : ndarray, shape (..., h, w)
        Source raster(s); any number of leading axes.
    out_h, out_w : int
        Target size, both >= 1.

    Returns
    -------
    ndarray, shape (..., out_h, out_w), float64
        Always a fresh array, even in the identity case.
    """
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim < 2:
        raise ValueError(f"need at least 2 axes, got shape {a.shape}")
    h, w = a.shape[-2:]
    if h < 1 or w < 1:
        raise ValueError(f"source raster is empty: shape {a.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got ({out_h}, {out_w})")
    if (h, w) == (out_h, out_w):
        return a.copy()

    ylo, yhi, fy = _axis_weights(h, out_h)
    xlo, xhi, fx = _axis_weights(w, out_w)
    # Rows first, then columns; weights on each axis sum to 1.
    rows = a[..., ylo, :] * (1.0 - fy)[:, None] + a[..., yhi, :] * fy[:, None]
    return rows[..., xlo] * (1.0 - fx) + rows[..., xhi] * fx
