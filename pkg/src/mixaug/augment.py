"""Image-mixing operators and the label weights that go with them.

Images are dense float rasters of shape ``[channels, height, width]`` with 1
or 3 channels. Four mixing strategies are provided:

- ``mixup``:   convex blend of two whole images, weights (lam, 1 - lam).
- ``cutmix``:  a rectangle of image b pasted into image a at the same place,
               weights split by pasted area.
- ``cutout``:  a rectangle of image a erased to a fill value, label untouched.
- ``snapmix``: a rectangle cut from image b, resized, and pasted into a
               (generally different) rectangle of image a; label weights come
               from how much *semantic* mass each rectangle covers, so they
               need not sum to 1.

Label weights are produced by two interchangeable rules: ``area_ratio``
(weights from pixel counts) and ``semantic_ratio`` (weights from a
semantic-percent map, see :mod:`mixaug.cam`).

Rectangles are sampled the usual way for cut-based mixing: draw a mixing
ratio lam from Beta(alpha, alpha), give the box side lengths
``round(side * sqrt(lam))``, center it uniformly over the image, clip to the
image bounds, and recompute the realized area ratio from the clipped box.
The realized ratio, never the nominal lam, feeds the label math.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .interpolation import bilinear_resize

__all__ = [
    "STRATEGIES",
    "LABEL_STRATEGIES",
    "BoxRegion",
    "MixConfig",
    "MixResult",
    "sample_lambda",
    "sample_box",
    "mixup",
    "cutmix",
    "cutout",
    "transform_patch",
    "snapmix_image",
    "area_ratio_labels",
    "semantic_ratio_labels",
    "apply_mix",
    "mix_result_arrays",
    "check_image",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("mixup", "cutmix", "cutout", "snapmix")
LABEL_STRATEGIES = ("area_ratio", "semantic_ratio")


def check_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate the [channels, height, width] raster convention."""
    a = np.asarray(img)
    if a.ndim != 3:
        raise ValueError(f"{name} must be [channels, height, width], got shape {a.shape}")
    c, h, w = a.shape
    if c not in (1, 3):
        raise ValueError(f"{name} must have 1 or 3 channels, got {c}")
    if h < 1 or w < 1:
        raise ValueError(f"{name} has empty spatial extent: shape {a.shape}")
    return a


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned pixel rectangle, half-open on both axes.

    ``(x0, y0)`` is the top-left corner, ``(x1, y1)`` one past the
    bottom-right, so the box covers ``x0 <= x < x1`` and ``y0 <= y < y1``
    and an empty box has ``x0 == x1`` or ``y0 == y1``. ``realized_ratio``
    is the box area divided by the area of the image it was built for.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    realized_ratio: float

    @classmethod
    def from_corners(cls, x0: int, y0: int, x1: int, y1: int, width: int, height: int) -> "BoxRegion":
        if not (0 <= x0 <= x1 <= width and 0 <= y0 <= y1 <= height):
            raise ValueError(
                f"box ({x0},{y0})-({x1},{y1}) out of order or outside {width}x{height} image"
            )
        ratio = (x1 - x0) * (y1 - y0) / (width * height)
        return cls(int(x0), int(y0), int(x1), int(y1), float(ratio))

    @classmethod
    def full(cls, width: int, height: int) -> "BoxRegion":
        return cls(0, 0, int(width), int(height), 1.0)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def is_empty(self) -> bool:
        return self.x1 <= self.x0 or self.y1 <= self.y0

    @property
    def slices(self) -> tuple[slice, slice]:
        """(row slice, column slice) for indexing the trailing two image axes."""
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def area(self) -> int:
        return max(self.width, 0) * max(self.height, 0)


@dataclass(frozen=True)
class MixConfig:
    """Settings for one mixing policy.

    ``switch_prob`` is the probability that a given sample is mixed at all;
    unmixed samples pass through clean. ``symmetric`` forces the cut and the
    paste rectangle of snapmix to coincide (cutmix geometry); other
    strategies ignore it. ``label_strategy`` selects how label weights are
    computed and ``semantic_ratio`` is only meaningful for snapmix.
    """

    strategy: str
    alpha: float
    switch_prob: float = 0.5
    label_strategy: str = "area_ratio"
    symmetric: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.label_strategy not in LABEL_STRATEGIES:
            raise ValueError(
                f"unknown label_strategy {self.label_strategy!r}, expected one of {LABEL_STRATEGIES}"
            )
        if self.label_strategy == "semantic_ratio" and self.strategy != "snapmix":
            raise ValueError("semantic_ratio labels require strategy 'snapmix'")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not (0.0 <= self.switch_prob <= 1.0):
            raise ValueError(f"switch_prob must be in [0, 1], got {self.switch_prob}")


@dataclass
class MixResult:
    """One augmented training sample with its two-label supervision.

    ``rho_a`` and ``rho_b`` weight the losses against ``label_a`` and
    ``label_b``. Both lie in [0, 1]; mixup and cutmix keep
    ``rho_a + rho_b == 1`` while snapmix does not promise that. Boxes are
    ``None`` for strategies (or clean passes) that have none.
    """

    image: np.ndarray
    label_a: int
    label_b: int
    rho_a: float
    rho_b: float
    strategy: str
    box_a: BoxRegion | None = None
    box_b: BoxRegion | None = None


def sample_lambda(alpha: float, rng: np.random.Generator) -> float:
    """Draw a mixing ratio from Beta(alpha, alpha) on [0, 1]."""
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha}")
    return float(rng.beta(alpha, alpha))


def sample_box(lam: float, width: int, height: int, rng: np.random.Generator) -> BoxRegion:
    """Sample the rectangle for a nominal area share `lam` of a width x height image.

    Target side lengths are ``round(side * sqrt(lam))`` (half away from
    zero). The center is drawn uniformly over the pixel grid and the box is
    clipped to the image, so near-border draws shrink and the realized ratio
    is recomputed from the clipped box. Degenerate draws snap to the empty
    box (a zero-length side) or the full image (both sides at full length);
    the center is drawn either way so RNG consumption never depends on lam.
    """
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    if width < 1 or height < 1:
        raise ValueError(f"image must be non-empty, got {width}x{height}")
    root = math.sqrt(lam)
    box_w = int(math.floor(width * root + 0.5))
    box_h = int(math.floor(height * root + 0.5))
    cx = int(rng.integers(0, width))
    cy = int(rng.integers(0, height))
    if box_w == width and box_h == height:
        return BoxRegion.full(width, height)
    x0 = max(cx - box_w // 2, 0)
    x1 = min(cx - box_w // 2 + box_w, width)
    y0 = max(cy - box_h // 2, 0)
    y1 = min(cy - box_h // 2 + box_h, height)
    return BoxRegion.from_corners(x0, y0, x1, y1, width, height)


def _check_same_shape(img_a: np.ndarray, img_b: np.ndarray) -> None:
    if img_a.shape != img_b.shape:
        raise ValueError(f"image shapes differ: {img_a.shape} vs {img_b.shape}")


def _check_box_fits(box: BoxRegion, img: np.ndarray, name: str) -> None:
    _, h, w = img.shape
    if not (0 <= box.x0 <= box.x1 <= w and 0 <= box.y0 <= box.y1 <= h):
        raise ValueError(f"{name} ({box.x0},{box.y0})-({box.x1},{box.y1}) outside {w}x{h} image")


def mixup(
    img_a: np.ndarray,
    img_b: np.ndarray,
    lam: float,
    *,
    label_a: int = 0,
    label_b: int = 0,
) -> MixResult:
    """Blend two images: ``lam * img_a + (1 - lam) * img_b``.

    Label weights are (lam, 1 - lam), which always sum to one.
    """
    a = check_image(img_a, "img_a")
    b = check_image(img_b, "img_b")
    _check_same_shape(a, b)
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    mixed = lam * a.astype(np.float64) + (1.0 - lam) * b.astype(np.float64)
    return MixResult(
        image=mixed,
        label_a=int(label_a),
        label_b=int(label_b),
        rho_a=float(lam),
        rho_b=float(1.0 - lam),
        strategy="mixup",
    )


def cutmix(
    img_a: np.ndarray,
    img_b: np.ndarray,
    box: BoxRegion,
    *,
    label_a: int = 0,
    label_b: int = 0,
) -> MixResult:
    """Paste `box` of img_b into img_a at the same location.

    Label weights follow the realized pasted area: (1 - ratio, ratio).
    """
    a = check_image(img_a, "img_a")
    b = check_image(img_b, "img_b")
    _check_same_shape(a, b)
    _check_box_fits(box, a, "box")
    out = a.astype(np.float64, copy=True)
    ys, xs = box.slices
    out[:, ys, xs] = b[:, ys, xs]
    rho_a, rho_b = area_ratio_labels(box)
    return MixResult(
        image=out,
        label_a=int(label_a),
        label_b=int(label_b),
        rho_a=rho_a,
        rho_b=rho_b,
        strategy="cutmix",
        box_a=box,
        box_b=box,
    )


def cutout(
    img: np.ndarray,
    box: BoxRegion,
    fill: float = 0.0,
    *,
    label_a: int = 0,
) -> MixResult:
    """Erase `box` of `img` to `fill`; the label keeps full weight."""
    a = check_image(img, "img")
    _check_box_fits(box, a, "box")
    out = a.astype(np.float64, copy=True)
    ys, xs = box.slices
    out[:, ys, xs] = float(fill)
    return MixResult(
        image=out,
        label_a=int(label_a),
        label_b=int(label_a),
        rho_a=1.0,
        rho_b=0.0,
        strategy="cutout",
        box_a=box,
        box_b=None,
    )


def transform_patch(src: np.ndarray, src_box: BoxRegion, dst_w: int, dst_h: int) -> np.ndarray:
    """Crop `src_box` out of `src` and resize it to (dst_h, dst_w).

    Resizing uses the corner-aligned bilinear convention from
    :mod:`mixaug.interpolation`; a same-size crop comes back bit-identical.
    """
    a = check_image(src, "src")
    _check_box_fits(src_box, a, "src_box")
    if src_box.is_empty:
        raise ValueError("cannot resize an empty patch")
    if dst_w < 1 or dst_h < 1:
        raise ValueError(f"target patch size must be positive, got {dst_w}x{dst_h}")
    ys, xs = src_box.slices
    crop = a[:, ys, xs].astype(np.float64)
    return bilinear_resize(crop, dst_h, dst_w)


def snapmix_image(
    img_a: np.ndarray,
    box_a: BoxRegion,
    img_b: np.ndarray,
    box_b: BoxRegion,
) -> np.ndarray:
    """Compose the asymmetric cut-and-paste image.

    The `box_b` patch of `img_b` is resized to the `box_a` shape and pasted
    over `box_a` in `img_a`; pixels outside `box_a` are untouched. If either
    box is empty there is nothing to paste and a copy of `img_a` is returned.
    """
    a = check_image(img_a, "img_a")
    b = check_image(img_b, "img_b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"channel counts differ: {a.shape[0]} vs {b.shape[0]}")
    _check_box_fits(box_a, a, "box_a")
    _check_box_fits(box_b, b, "box_b")
    if box_a.is_empty or box_b.is_empty:
        return a.astype(np.float64, copy=True)
    out = a.astype(np.float64, copy=True)
    patch = transform_patch(b, box_b, box_a.width, box_a.height)
    ys, xs = box_a.slices
    out[:, ys, xs] = patch
    return out


def area_ratio_labels(box_a: BoxRegion) -> tuple[float, float]:
    """Label weights from pixel counts: (1 - realized_ratio, realized_ratio)."""
    r = float(box_a.realized_ratio)
    return 1.0 - r, r


def semantic_ratio_labels(
    spm_a: np.ndarray,
    box_a: BoxRegion,
    spm_b: np.ndarray,
    box_b: BoxRegion,
) -> tuple[float, float]:
    """Label weights from semantic mass instead of pixel counts.

    ``rho_a`` is the semantic mass of image a that survives the paste
    (1 minus the mass inside `box_a`); ``rho_b`` is the semantic mass of
    image b that was cut (the mass inside `box_b`). Each is clamped to
    [0, 1]; their sum is unconstrained, e.g. pasting pure background over a
    discriminative region yields rho_a + rho_b < 1.
    """
    sa = np.asarray(spm_a, dtype=np.float64)
    sb = np.asarray(spm_b, dtype=np.float64)
    if sa.ndim != 2 or sb.ndim != 2:
        raise ValueError("semantic maps must be 2-D [height, width]")
    ha, wa = sa.shape
    hb, wb = sb.shape
    if not (box_a.x1 <= wa and box_a.y1 <= ha):
        raise ValueError(f"box_a exceeds map of shape {sa.shape}")
    if not (box_b.x1 <= wb and box_b.y1 <= hb):
        raise ValueError(f"box_b exceeds map of shape {sb.shape}")
    ys_a, xs_a = box_a.slices
    ys_b, xs_b = box_b.slices
    rho_a = 1.0 - float(sa[ys_a, xs_a].sum())
    rho_b = float(sb[ys_b, xs_b].sum())
    return min(max(rho_a, 0.0), 1.0), min(max(rho_b, 0.0), 1.0)


def _clean_result(image: np.ndarray, label: int, strategy: str) -> MixResult:
    return MixResult(
        image=np.asarray(image, dtype=np.float64).copy(),
        label_a=int(label),
        label_b=int(label),
        rho_a=1.0,
        rho_b=0.0,
        strategy=strategy,
    )


def apply_mix(
    images: np.ndarray,
    labels: np.ndarray,
    config: MixConfig,
    rng: np.random.Generator,
    spm_provider: Callable[[int], np.ndarray] | None = None,
) -> list[MixResult]:
    """Mix a batch according to `config`.

    For every sample an independent coin with ``config.switch_prob`` decides
    whether it is mixed; clean samples pass through with weights (1, 0).
    Mixing partners are drawn uniformly from the *other* members of the same
    batch. ``spm_provider`` maps a batch index to that sample's
    semantic-percent map and is only consulted for semantic-ratio labels.

    Per-sample draw order (documented so seeded runs are reproducible):
    switch coin, partner index (strategies that pair), lam_a, box_a center,
    then for asymmetric snapmix lam_b and box_b center.

    A batch with fewer than two samples cannot pair; with a positive
    switch_prob it emits clean samples and logs one warning event.
    """
    imgs = np.asarray(images, dtype=np.float64)
    if imgs.ndim != 4:
        raise ValueError(f"images must be [n, channels, height, width], got shape {imgs.shape}")
    labs = np.asarray(labels)
    if labs.shape != (imgs.shape[0],):
        raise ValueError(f"labels shape {labs.shape} does not match batch of {imgs.shape[0]}")
    n, _, height, width = imgs.shape
    if n == 0:
        return []

    if config.label_strategy == "semantic_ratio" and config.strategy == "snapmix" and spm_provider is None:
        raise ValueError("semantic_ratio labels need an spm_provider")

    if n < 2 and config.switch_prob > 0.0:
        logger.warning(
            "batch of %d cannot be paired for mixing; emitting clean samples", n
        )
        return [_clean_result(imgs[i], labs[i], config.strategy) for i in range(n)]

    results: list[MixResult] = []
    for i in range(n):
        if not (rng.random() < config.switch_prob):
            results.append(_clean_result(imgs[i], labs[i], config.strategy))
            continue

        if config.strategy == "cutout":
            lam = sample_lambda(config.alpha, rng)
            box = sample_box(lam, width, height, rng)
            results.append(cutout(imgs[i], box, label_a=labs[i]))
            continue

        draw = int(rng.integers(0, n - 1))
        j = draw + 1 if draw >= i else draw

        if config.strategy == "mixup":
            lam = sample_lambda(config.alpha, rng)
            results.append(mixup(imgs[i], imgs[j], lam, label_a=labs[i], label_b=labs[j]))
            continue

        # cutmix and snapmix share the cut-and-paste skeleton; symmetric
        # snapmix draws exactly what cutmix draws so seeded runs align.
        lam_a = sample_lambda(config.alpha, rng)
        box_a = sample_box(lam_a, width, height, rng)

        if config.strategy == "cutmix":
            results.append(cutmix(imgs[i], imgs[j], box_a, label_a=labs[i], label_b=labs[j]))
            continue

        if config.symmetric:
            box_b = box_a
        else:
            lam_b = sample_lambda(config.alpha, rng)
            box_b = sample_box(lam_b, width, height, rng)

        if box_a.is_empty or box_b.is_empty:
            # Nothing gets pasted: clean image, full weight on label a.
            results.append(
                MixResult(
                    image=imgs[i].copy(),
                    label_a=int(labs[i]),
                    label_b=int(labs[j]),
                    rho_a=1.0,
                    rho_b=0.0,
                    strategy="snapmix",
                    box_a=box_a,
                    box_b=box_b,
                )
            )
            continue

        mixed = snapmix_image(imgs[i], box_a, imgs[j], box_b)
        if config.label_strategy == "semantic_ratio":
            rho_a, rho_b = semantic_ratio_labels(
                spm_provider(i), box_a, spm_provider(j), box_b
            )
        else:
            rho_a, rho_b = area_ratio_labels(box_a)
        results.append(
            MixResult(
                image=mixed,
                label_a=int(labs[i]),
                label_b=int(labs[j]),
                rho_a=rho_a,
                rho_b=rho_b,
                strategy="snapmix",
                box_a=box_a,
                box_b=box_b,
            )
        )
    return results


def mix_result_arrays(
    results: Sequence[MixResult],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack a batch of MixResults into (images, label_a, label_b, rho_a, rho_b)."""
    if not results:
        raise ValueError("empty batch")
    images = np.stack([r.image for r in results]).astype(np.float64)
    label_a = np.array([r.label_a for r in results], dtype=np.int64)
    label_b = np.array([r.label_b for r in results], dtype=np.int64)
    rho_a = np.array([r.rho_a for r in results], dtype=np.float64)
    rho_b = np.array([r.rho_b for r in results], dtype=np.float64)
    return images, label_a, label_b, rho_a, rho_b
