"""
Four ways to mix a pair of training images
==========================================

Every strategy in this library takes two labeled images and produces one
augmented image plus a pair of label weights ``(rho_a, rho_b)`` that say how
much of each source class the result still contains.  This script applies
all four strategies to the same image pair and saves a side-by-side strip
for each, so the geometric differences are easy to see.

Run from the repository root::

    python3 demos/01_mixing_strategies.py
"""

from pathlib import Path

import numpy as np

from mixaug import (
    SyntheticSpec,
    cutmix,
    cutout,
    generate,
    mixup,
    sample_box,
    sample_lambda,
    snapmix_image,
    semantic_ratio_labels,
    substream,
)
from mixaug.render import mix_panel, save_png

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# A pair of images from the synthetic dataset.  Each image is a textured
# background with a small class-specific cue patch pasted somewhere.

dataset = generate(
    SyntheticSpec(
        num_classes=3,
        image_size=32,
        cue_size=8,
        background_alphabet=3,
        noise_std=0.03,
        samples_per_class=4,
        seed=11,
    )
)
images, labels, _ = dataset.arrays("train")
idx_a = int(np.flatnonzero(labels == 0)[0])
idx_b = int(np.flatnonzero(labels == 1)[0])
img_a, img_b = images[idx_a], images[idx_b]
print(f"image a: class {labels[idx_a]}, image b: class {labels[idx_b]}")

rng = substream(3, "demo-mixing")

# ---------------------------------------------------------------------------
# Cutout erases a random box.  Only one image is involved; the label keeps
# full weight because nothing from another class was pasted in.

lam = sample_lambda(1.0, rng)
box = sample_box(lam, 32, 32, rng)
res = cutout(img_a, box)
print(f"cutout:  erased box {box.width}x{box.height}, weights ({res.rho_a:.3f}, {res.rho_b:.3f})")
save_png(OUT / "mix_cutout.png", mix_panel(img_a, img_a, res.image, box_a=box))

# ---------------------------------------------------------------------------
# Mixup blends the full images.  The blend coefficient doubles as the label
# weight, so the two weights always sum to one.

lam = sample_lambda(1.0, rng)
res = mixup(img_a, img_b, lam, label_a=0, label_b=1)
print(f"mixup:   lambda {lam:.3f}, weights ({res.rho_a:.3f}, {res.rho_b:.3f})")
save_png(OUT / "mix_mixup.png", mix_panel(img_a, img_b, res.image))

# ---------------------------------------------------------------------------
# Cutmix pastes a box of image b into image a at the same location.  Label
# weights follow the pasted area, so they are complementary too -- even when
# the box happens to carry only background.

lam = sample_lambda(3.0, rng)
box = sample_box(lam, 32, 32, rng)
res = cutmix(img_a, img_b, box, label_a=0, label_b=1)
print(
    f"cutmix:  box {box.width}x{box.height} covers {box.realized_ratio:.3f} of the image, "
    f"weights ({res.rho_a:.3f}, {res.rho_b:.3f})"
)
save_png(OUT / "mix_cutmix.png", mix_panel(img_a, img_b, res.image, box_a=box, box_b=box))

# ---------------------------------------------------------------------------
# The semantic paste cuts one random box from b, resizes it, and pastes it
# over a different random box in a.  Label weights come from semantic maps
# rather than pixel counts; here we use the ground-truth cue masks as ideal
# maps, so the weights reflect how much *evidence* moved, not how many
# pixels.  Pasting pure background over the cue drives both weights down --
# the weights are independent and need not sum to one.

mask_a = dataset.sample("train", idx_a).semantic_mask.astype(np.float64)
mask_b = dataset.sample("train", idx_b).semantic_mask.astype(np.float64)
spm_a = mask_a / mask_a.sum()
spm_b = mask_b / mask_b.sum()

lam = sample_lambda(5.0, rng)
box_a = sample_box(lam, 32, 32, rng)
box_b = sample_box(sample_lambda(5.0, rng), 32, 32, rng)
mixed = snapmix_image(img_a, box_a, img_b, box_b)
rho_a, rho_b = semantic_ratio_labels(spm_a, box_a, spm_b, box_b)
print(
    f"snapmix: paste {box_b.width}x{box_b.height} -> {box_a.width}x{box_a.height}, "
    f"weights ({rho_a:.3f}, {rho_b:.3f}), sum {rho_a + rho_b:.3f}"
)
save_png(
    OUT / "mix_snapmix.png",
    mix_panel(img_a, img_b, mixed, box_a=box_a, box_b=box_b, spm_a=spm_a, spm_b=spm_b),
)

print(f"strips written to {OUT}/mix_*.png")
