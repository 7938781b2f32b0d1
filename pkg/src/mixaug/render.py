"""Deterministic image rendering helpers.

Everything here is plain array arithmetic so that preview panels are
byte-for-byte reproducible: a fixed piecewise-linear heat colormap, alpha
overlays, box outlines, nearest-neighbour upscaling, and horizontal panel
strips.  PNG encoding goes through Pillow.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .augment import BoxRegion

__all__ = [
    "BOX_COLOR_A",
    "BOX_COLOR_B",
    "heat_to_rgb",
    "to_display",
    "overlay_heat",
    "draw_box",
    "upscale_nearest",
    "hstack_panels",
    "mix_panel",
    "save_png",
]

# Outline colors for the erased region (A) and the pasted region (B).
BOX_COLOR_A = (1.0, 0.2, 0.2)
BOX_COLOR_B = (0.2, 0.4, 1.0)


def heat_to_rgb(heat: np.ndarray) -> np.ndarray:
    """Map a non-negative 2-d map to an RGB image via a fixed ramp.

    The map is scaled by its own maximum, then colored along a
    black -> red -> yellow -> white ramp.  An all-zero map stays black.

    Returns a float array of shape [H, W, 3] in [0, 1].
    """
    heat = np.asarray(heat, dtype=np.float64)
    if heat.ndim != 2:
        raise ValueError(f"expected a 2-d map, got shape {heat.shape}")
    if np.any(heat < 0):
        raise ValueError("heat map must be non-negative")
    peak = float(heat.max()) if heat.size else 0.0
    t = heat / peak if peak > 0 else np.zeros_like(heat)
    rgb = np.empty(heat.shape + (3,), dtype=np.float64)
    rgb[..., 0] = np.clip(3.0 * t, 0.0, 1.0)
    rgb[..., 1] = np.clip(3.0 * t - 1.0, 0.0, 1.0)
    rgb[..., 2] = np.clip(3.0 * t - 2.0, 0.0, 1.0)
    return rgb


def to_display(image: np.ndarray) -> np.ndarray:
    """Convert a [C, H, W] float image to a clipped [H, W, 3] display array.

    Single-channel images are replicated to gray RGB.  Values are clipped to
    [0, 1]; standardized inputs should be rescaled by the caller first.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise ValueError(f"expected [C, H, W] with 1 or 3 channels, got {image.shape}")
    hwc = np.transpose(image, (1, 2, 0))
    if hwc.shape[2] == 1:
        hwc = np.repeat(hwc, 3, axis=2)
    return np.clip(hwc, 0.0, 1.0)


def overlay_heat(image: np.ndarray, heat: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    """Blend a heat map over an image: (1 - alpha) * image + alpha * colormap."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    base = to_display(image)
    rgb = heat_to_rgb(heat)
    if rgb.shape[:2] != base.shape[:2]:
        raise ValueError(
            f"heat shape {rgb.shape[:2]} does not match image shape {base.shape[:2]}"
        )
    return (1.0 - alpha) * base + alpha * rgb


def draw_box(
    display: np.ndarray,
    box: BoxRegion,
    color: tuple[float, float, float],
    thickness: int = 1,
) -> np.ndarray:
    """Return a copy of an [H, W, 3] display array with a box outline drawn.

    The outline sits just inside the half-open box bounds.  Empty boxes are
    returned unchanged.
    """
    display = np.asarray(display, dtype=np.float64)
    if display.ndim != 3 or display.shape[2] != 3:
        raise ValueError(f"expected [H, W, 3], got {display.shape}")
    if thickness < 1:
        raise ValueError("thickness must be >= 1")
    out = display.copy()
    if box.is_empty:
        return out
    col = np.asarray(color, dtype=np.float64)
    t = thickness
    y0, y1, x0, x1 = box.y0, box.y1, box.x0, box.x1
    out[y0 : min(y0 + t, y1), x0:x1] = col
    out[max(y1 - t, y0) : y1, x0:x1] = col
    out[y0:y1, x0 : min(x0 + t, x1)] = col
    out[y0:y1, max(x1 - t, x0) : x1] = col
    return out


def upscale_nearest(display: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbour upscale of an [H, W, 3] array by an integer factor."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    display = np.asarray(display, dtype=np.float64)
    return np.repeat(np.repeat(display, factor, axis=0), factor, axis=1)


def hstack_panels(
    panels: list[np.ndarray],
    separator: int = 2,
    separator_value: float = 1.0,
) -> np.ndarray:
    """Concatenate same-height [H, W, 3] panels with solid separator columns."""
    if not panels:
        raise ValueError("need at least one panel")
    heights = {p.shape[0] for p in panels}
    if len(heights) != 1:
        raise ValueError(f"panels must share a height, got {sorted(heights)}")
    sep = np.full((panels[0].shape[0], separator, 3), separator_value, dtype=np.float64)
    parts: list[np.ndarray] = []
    for i, panel in enumerate(panels):
        if i:
            parts.append(sep)
        parts.append(np.asarray(panel, dtype=np.float64))
    return np.concatenate(parts, axis=1)


def mix_panel(
    image_a: np.ndarray,
    image_b: np.ndarray,
    mixed: np.ndarray,
    box_a: BoxRegion | None = None,
    box_b: BoxRegion | None = None,
    spm_a: np.ndarray | None = None,
    spm_b: np.ndarray | None = None,
    upscale: int = 4,
) -> np.ndarray:
    """Compose a side-by-side strip: source A, source B, mixed result.

    Box outlines mark the erased region on A and the source patch on B.  When
    relevance maps are given, two overlay panels are appended.  The strip is
    nearest-neighbour upscaled so small images stay legible.
    """
    panel_a = to_display(image_a)
    panel_b = to_display(image_b)
    if box_a is not None:
        panel_a = draw_box(panel_a, box_a, BOX_COLOR_A)
    if box_b is not None:
        panel_b = draw_box(panel_b, box_b, BOX_COLOR_B)
    panels = [panel_a, panel_b, to_display(mixed)]
    if spm_a is not None:
        panels.append(overlay_heat(image_a, spm_a))
    if spm_b is not None:
        panels.append(overlay_heat(image_b, spm_b))
    strip = hstack_panels([upscale_nearest(p, upscale) for p in panels])
    return strip


def save_png(path, display: np.ndarray) -> None:
    """Write an [H, W, 3] float display array in [0, 1] to a PNG file."""
    display = np.asarray(display, dtype=np.float64)
    if display.ndim != 3 or display.shape[2] != 3:
        raise ValueError(f"expected [H, W, 3], got {display.shape}")
    quantized = np.round(np.clip(display, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")
