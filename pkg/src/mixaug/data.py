"""Datasets: a synthetic fine-grained benchmark and folder ingestion.

The synthetic task is deliberately fine-grained in miniature: every class
shares the same small alphabet of smooth background motifs, and the only
class evidence is a small fixed micro-texture cue pasted at a random
location, plus optional Gaussian pixel noise. Because the cue region is
known exactly, each sample carries a ground-truth semantic mask, which is
what lets label-weight estimators be scored against the truth (see
:func:`mixaug.harness.noise_benchmark`).

Folder ingestion follows the usual directory-per-class layout and the
standard large-image recipe: square resize, crop (random for the training
split, center for evaluation), optional horizontal flip on training images,
and pixel values scaled to [0, 1].
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import BoxRegion
from .interpolation import bilinear_resize
from .seeding import substream

__all__ = [
    "SyntheticSpec",
    "FolderSpec",
    "GroundTruthSample",
    "SplitDataset",
    "generate",
    "true_semantic_ratio",
    "mask_box_ratio",
    "ingest_folder",
    "write_manifest",
]

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA = "mixaug-manifest/1"


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset; the seed pins it byte-for-byte."""

    num_classes: int
    image_size: int
    cue_size: int
    background_alphabet: int = 4
    noise_std: float = 0.0
    samples_per_class: int = 30
    seed: int = 0
    channels: int = 3

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.image_size < 2:
            raise ValueError(f"image_size must be >= 2, got {self.image_size}")
        if not (1 <= self.cue_size < self.image_size):
            raise ValueError(
                f"cue_size must be in [1, image_size), got {self.cue_size} vs {self.image_size}"
            )
        if self.background_alphabet < 1:
            raise ValueError("background_alphabet must be >= 1")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")


@dataclass(frozen=True)
class FolderSpec:
    """Recipe for ingesting a directory-per-class image tree."""

    path: str
    resize: int = 512
    crop: int = 448
    flip: bool = True
    normalize: str = "unit"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.resize < 1 or self.crop < 1 or self.crop > self.resize:
            raise ValueError(f"need 1 <= crop <= resize, got crop {self.crop}, resize {self.resize}")
        if self.normalize not in ("unit", "meanstd"):
            raise ValueError(f"normalize must be 'unit' or 'meanstd', got {self.normalize!r}")


@dataclass(frozen=True)
class GroundTruthSample:
    """One image with its label and the exact pixel mask of the class cue."""

    image: np.ndarray
    label: int
    semantic_mask: np.ndarray


@dataclass
class SplitDataset:
    """Train/test arrays plus optional per-sample semantic masks."""

    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    train_masks: np.ndarray | None = None
    test_masks: np.ndarray | None = None
    class_names: tuple[str, ...] = ()
    skipped: int = 0

    @property
    def num_classes(self) -> int:
        return int(max(self.train_labels.max(), self.test_labels.max())) + 1

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.train_images.shape[1:])

    def arrays(self, split: str):
        if split == "train":
            return self.train_images, self.train_labels, self.train_masks
        if split == "test":
            return self.test_images, self.test_labels, self.test_masks
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")

    def sample(self, split: str, index: int) -> GroundTruthSample:
        images, labels, masks = self.arrays(split)
        if masks is None:
            raise ValueError(f"{split} split carries no semantic masks")
        return GroundTruthSample(images[index], int(labels[index]), masks[index])

    def samples(self, split: str):
        images, _, _ = self.arrays(split)
        for i in range(len(images)):
            yield self.sample(split, i)


def _stratified_split(labels: np.ndarray, rng: np.random.Generator, test_frac: float = 0.2):
    """Per-class 80/20 split; class counts stay within 1 of the exact target."""
    train_idx, test_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        perm = members[rng.permutation(len(members))]
        n_test = int(np.floor(test_frac * len(members) + 0.5))
        if len(members) > 1:
            n_test = min(max(n_test, 0), len(members) - 1)
        test_idx.extend(perm[:n_test])
        train_idx.extend(perm[n_test:])
    return np.sort(np.array(train_idx, dtype=np.intp)), np.sort(np.array(test_idx, dtype=np.intp))


def generate(spec: SyntheticSpec) -> SplitDataset:
    """Build the synthetic benchmark described by `spec`.

    Backgrounds are smooth random fields shared across classes; each class
    owns one fixed high-frequency cue patch pasted fully inside the image at
    a random position. The semantic mask marks exactly the painted cue
    pixels. Gaussian noise (clipped back to [0, 1]) is added last. The split
    is stratified 80/20 per class.
    """
    rng = substream(spec.seed, "datagen")
    size, cue, ch = spec.image_size, spec.cue_size, spec.channels

    coarse = 4
    # Backgrounds are dim so that cue evidence, not shared background energy,
    # dominates pooled features; a from-scratch net with a bias-free head is
    # otherwise stuck fitting a huge class-independent offset first.
    motifs = [
        bilinear_resize(rng.uniform(0.05, 0.30, (ch, coarse, coarse)), size, size)
        for _ in range(spec.background_alphabet)
    ]
    # Each class cue = bright flat class-coded tint + micro-texture. The tint
    # puts class evidence in first-order statistics a small net can latch
    # onto from scratch; the texture keeps cues locally distinctive.
    tints = rng.uniform(0.45, 1.0, (spec.num_classes, ch, 1, 1))
    texture = rng.uniform(0.0, 1.0, (spec.num_classes, ch, cue, cue))
    cues = 0.65 * tints + 0.35 * texture
    for i in range(spec.num_classes):
        for j in range(i + 1, spec.num_classes):
            if np.array_equal(cues[i], cues[j]):
                raise ValueError(f"cue patterns for classes {i} and {j} are identical")

    n_total = spec.num_classes * spec.samples_per_class
    images = np.empty((n_total, ch, size, size), dtype=np.float64)
    labels = np.empty(n_total, dtype=np.int64)
    masks = np.zeros((n_total, size, size), dtype=bool)
    pos = 0
    for cls in range(spec.num_classes):
        for _ in range(spec.samples_per_class):
            img = motifs[int(rng.integers(0, spec.background_alphabet))].copy()
            # Cue placed fully inside; the paste clips defensively so the mask
            # always marks exactly the painted pixels.
            tx = int(rng.integers(0, size - cue + 1))
            ty = int(rng.integers(0, size - cue + 1))
            x1, y1 = min(tx + cue, size), min(ty + cue, size)
            img[:, ty:y1, tx:x1] = cues[cls][:, : y1 - ty, : x1 - tx]
            # Unit noise is drawn whether or not it is applied, so the same
            # seed lays out identical scenes at every noise level.
            noise = rng.normal(0.0, 1.0, img.shape)
            if spec.noise_std > 0:
                img += spec.noise_std * noise
                np.clip(img, 0.0, 1.0, out=img)
            images[pos] = img
            labels[pos] = cls
            masks[pos, ty:y1, tx:x1] = True
            pos += 1

    train_idx, test_idx = _stratified_split(labels, rng)
    return SplitDataset(
        train_images=images[train_idx],
        train_labels=labels[train_idx],
        test_images=images[test_idx],
        test_labels=labels[test_idx],
        train_masks=masks[train_idx],
        test_masks=masks[test_idx],
        class_names=tuple(f"class_{i:03d}" for i in range(spec.num_classes)),
    )


def mask_box_ratio(mask: np.ndarray, box: BoxRegion) -> float:
    """Fraction of mask pixels that fall inside `box`."""
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    total = int(m.sum())
    if total == 0:
        raise ValueError("mask is empty; the sample has no semantic region")
    ys, xs = box.slices
    return float(m[ys, xs].sum()) / total


def true_semantic_ratio(sample: GroundTruthSample, box: BoxRegion) -> float:
    """Ground-truth share of the sample's cue covered by `box`."""
    return mask_box_ratio(sample.semantic_mask, box)


# ---------------------------------------------------------------------------
# folder ingestion


def _decode_image(path: Path, resize: int) -> np.ndarray | None:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB").resize((resize, resize), Image.BILINEAR)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        logger.warning("skipping undecodable file %s (%s)", path, exc)
        return None
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return arr.transpose(2, 0, 1)


def _crop(img: np.ndarray, crop: int, rng: np.random.Generator | None) -> np.ndarray:
    _, h, w = img.shape
    if rng is None:
        ty, tx = (h - crop) // 2, (w - crop) // 2
    else:
        ty = int(rng.integers(0, h - crop + 1))
        tx = int(rng.integers(0, w - crop + 1))
    return img[:, ty : ty + crop, tx : tx + crop]


def ingest_folder(spec: FolderSpec) -> tuple[SplitDataset, list[dict]]:
    """Load a directory-per-class tree into a SplitDataset.

    Class labels follow lexicographic directory order. Training images get a
    random crop (plus a coin-flip horizontal flip when ``spec.flip``); test
    images get the center crop. Undecodable files are skipped with a warning
    and counted; a class directory with no decodable image is an error.
    Returns the dataset and its manifest records.
    """
    root = Path(spec.path)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"dataset root {root} has no class directories")

    rng = substream(spec.seed, "ingest")
    images: list[np.ndarray] = []
    labels: list[int] = []
    sources: list[str] = []
    skipped = 0
    for label, cdir in enumerate(class_dirs):
        files = sorted(p for p in cdir.iterdir() if p.is_file())
        decoded = 0
        for f in files:
            arr = _decode_image(f, spec.resize)
            if arr is None:
                skipped += 1
                continue
            images.append(arr)
            labels.append(label)
            sources.append(str(f))
            decoded += 1
        if decoded == 0:
            raise ValueError(f"class directory {cdir} has no decodable images")

    labels_arr = np.array(labels, dtype=np.int64)
    train_idx, test_idx = _stratified_split(labels_arr, rng)

    def finish(idx: np.ndarray, training: bool) -> np.ndarray:
        out = np.empty((len(idx), 3, spec.crop, spec.crop), dtype=np.float64)
        for row, i in enumerate(idx):
            img = _crop(images[i], spec.crop, rng if training else None)
            if training and spec.flip and rng.random() < 0.5:
                img = img[:, :, ::-1]
            out[row] = img
        return out

    train_images = finish(train_idx, training=True)
    test_images = finish(test_idx, training=False)
    if spec.normalize == "meanstd":
        # Explicit opt-out of the unit range: standardize each channel with
        # the training split's statistics.
        mean = train_images.mean(axis=(0, 2, 3), keepdims=True)
        std = train_images.std(axis=(0, 2, 3), keepdims=True)
        std[std == 0] = 1.0
        for arr in (train_images, test_images):
            arr -= mean
            arr /= std

    ds = SplitDataset(
        train_images=train_images,
        train_labels=labels_arr[train_idx],
        test_images=test_images,
        test_labels=labels_arr[test_idx],
        class_names=tuple(d.name for d in class_dirs),
        skipped=skipped,
    )
    records = _manifest_records(ds, split_sources(sources, train_idx, test_idx))
    return ds, records


def split_sources(sources: list[str], train_idx: np.ndarray, test_idx: np.ndarray):
    return (
        [sources[i] for i in train_idx],
        [sources[i] for i in test_idx],
    )


def _manifest_records(ds: SplitDataset, sources: tuple[list[str], list[str]] | None = None) -> list[dict]:
    records = []
    sid = 0
    for split, images, labels, masks in (
        ("train", ds.train_images, ds.train_labels, ds.train_masks),
        ("test", ds.test_images, ds.test_labels, ds.test_masks),
    ):
        for i in range(len(images)):
            if sources is not None:
                src = sources[0][i] if split == "train" else sources[1][i]
            else:
                src = f"inline:{split}:{i}"
            records.append(
                {
                    "record": "sample",
                    "id": sid,
                    "label": int(labels[i]),
                    "class": ds.class_names[int(labels[i])] if ds.class_names else str(int(labels[i])),
                    "split": split,
                    "source": src,
                    "mask": f"inline:{split}:{i}" if masks is not None else None,
                }
            )
            sid += 1
    records.append(
        {
            "record": "meta",
            "schema": MANIFEST_SCHEMA,
            "total": sid,
            "skipped": ds.skipped,
            "classes": list(ds.class_names),
        }
    )
    return records


def write_manifest(ds: SplitDataset, path, sources: tuple[list[str], list[str]] | None = None) -> None:
    """Write the line-delimited JSON manifest: one sample record per line,
    then one meta record with totals and the class list."""
    records = _manifest_records(ds, sources)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
