"""Class activation maps and semantic-percent maps.

For a network whose classifier is a linear head over globally averaged
convolutional features, the activation map of class y is the head row for y
contracted against the feature stack, upsampled to image size, with negative
responses clamped to zero (head bias, if any, plays no part). Normalizing an
activation map to unit sum turns it into a semantic-percent map (SPM): a
density saying which share of the image's class evidence sits on each pixel.
A map with no positive response falls back to the uniform density, which
makes semantic-ratio label weights degrade gracefully to area ratios.
"""

from __future__ import annotations

import numpy as np

from .interpolation import bilinear_resize

__all__ = ["compute_cam", "make_spm", "batch_spms", "check_spm", "ZERO_SUM_EPS"]

# Activation mass below this is treated as "no response" by make_spm.
ZERO_SUM_EPS = 1e-12


def compute_cam(features: np.ndarray, weights: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Class activation map from a feature stack and one classifier row.

    Parameters
    ----------
    features : ndarray, shape (depth, h, w)
        Final-stage convolutional features of one image.
    weights : ndarray, shape (depth,)
        Classifier head row of the class being mapped.
    out_h, out_w : int
        Output size; must be at least the feature grid size (maps are only
        ever upsampled).

    Returns
    -------
    ndarray, shape (out_h, out_w)
        Non-negative activation map.
    """
    f = np.asarray(features, dtype=np.float64)
    v = np.asarray(weights, dtype=np.float64)
    if f.ndim != 3:
        raise ValueError(f"features must be [depth, h, w], got shape {f.shape}")
    if v.shape != (f.shape[0],):
        raise ValueError(f"weight vector {v.shape} does not match feature depth {f.shape[0]}")
    if out_h < f.shape[1] or out_w < f.shape[2]:
        raise ValueError(
            f"output {out_h}x{out_w} smaller than feature grid {f.shape[1]}x{f.shape[2]}"
        )
    raw = np.tensordot(v, f, axes=(0, 0))
    up = bilinear_resize(raw, out_h, out_w)
    return np.maximum(up, 0.0)


def make_spm(cam: np.ndarray) -> np.ndarray:
    """Normalize an activation map into a semantic-percent map.

    Entries are non-negative and sum to 1. An all-zero map (total mass below
    ``ZERO_SUM_EPS``) becomes the uniform density 1 / (h * w).
    """
    c = np.asarray(cam, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cam must be 2-D, got shape {c.shape}")
    if (c < 0).any():
        raise ValueError("cam has negative entries; clamp before normalizing")
    total = float(c.sum())
    if total < ZERO_SUM_EPS:
        return np.full(c.shape, 1.0 / c.size, dtype=np.float64)
    return c / total


def check_spm(spm: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Assert the semantic-percent-map contract: non-negative, sums to 1."""
    s = np.asarray(spm, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"spm must be 2-D, got shape {s.shape}")
    if (s < 0).any():
        raise ValueError("spm has negative entries")
    total = float(s.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"spm sums to {total}, expected 1 within {tol}")
    return s


def batch_spms(model, images: np.ndarray, labels: np.ndarray) -> list[np.ndarray]:
    """Semantic-percent maps for a batch, one per (image, true label) pair.

    Runs the model forward once (no learning happens here) and maps each
    image with its own label's head row at full image resolution.
    """
    imgs = np.asarray(images, dtype=np.float64)
    if imgs.ndim != 4:
        raise ValueError(f"images must be [n, channels, height, width], got {imgs.shape}")
    labs = np.asarray(labels, dtype=np.int64)
    if labs.shape != (imgs.shape[0],):
        raise ValueError(f"labels shape {labs.shape} does not match batch of {imgs.shape[0]}")
    head = model.params["head.w"]
    if labs.size and (labs.min() < 0 or labs.max() >= head.shape[0]):
        raise ValueError(f"labels outside [0, {head.shape[0]})")
    _, feats, _ = model.forward_batch(imgs)
    h, w = imgs.shape[2], imgs.shape[3]
    return [make_spm(compute_cam(feats[i], head[labs[i]], h, w)) for i in range(len(imgs))]
