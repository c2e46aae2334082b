"""Training-time augmentation: random scale/translation and HSV exposure/saturation jitter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

from udet.detect.boxes import GroundTruthBox

FILL = 0.5


@dataclass(frozen=True)
class AugmentConfig:
    scale: tuple = (0.8, 1.2)
    translate: float = 0.2
    hsv_factor: float = 1.5
    enabled: bool = True


def affine(image, boxes, scale, tx, ty):
    """Scale about the image center, then shift by ``(tx, ty)`` image fractions.

    Pixels are resampled nearest-neighbour; uncovered pixels are mid-gray.
    A box whose center leaves the image is dropped; the rest are clipped.
    """
    h, w, _ = image.shape
    src_x = np.floor((((np.arange(w) + 0.5) / w - 0.5 - tx) / scale + 0.5) * w).astype(int)
    src_y = np.floor((((np.arange(h) + 0.5) / h - 0.5 - ty) / scale + 0.5) * h).astype(int)
    valid = ((src_y >= 0) & (src_y < h))[:, None] & ((src_x >= 0) & (src_x < w))[None, :]
    out = image[np.clip(src_y, 0, h - 1)[:, None], np.clip(src_x, 0, w - 1)[None, :]]
    out = np.where(valid[..., None], out, FILL)

    moved = []
    for b in boxes:
        cx = (b.cx - 0.5) * scale + 0.5 + tx
        cy = (b.cy - 0.5) * scale + 0.5 + ty
        if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
            continue
        bw, bh = b.w * scale, b.h * scale
        x0, x1 = max(cx - bw / 2, 0.0), min(cx + bw / 2, 1.0)
        y0, y1 = max(cy - bh / 2, 0.0), min(cy + bh / 2, 1.0)
        moved.append(GroundTruthBox.from_corners(b.class_id, x0, y0, x1, y1))
    return out, moved


def scale_hsv(image, saturation, value):
    hsv = rgb_to_hsv(np.clip(image, 0.0, 1.0))
    hsv[..., 1] = np.clip(hsv[..., 1] * saturation, 0.0, 1.0)
    hsv[..., 2] = np.clip(hsv[..., 2] * value, 0.0, 1.0)
    return hsv_to_rgb(hsv)


def hsv_jitter(image, rng, factor_max=1.5):
    """Multiply saturation and value by independent log-uniform factors in ``[1/f, f]``."""
    if factor_max < 1:
        raise ValueError(f"factor_max must be >= 1, got {factor_max}")
    spread = np.log(factor_max)
    sat, val = np.exp(rng.uniform(-spread, spread, size=2))
    return scale_hsv(image, sat, val)


def augment(image, boxes, rng, config=AugmentConfig()):
    if not config.enabled:
        return image, list(boxes)
    scale = rng.uniform(*config.scale)
    tx, ty = rng.uniform(-config.translate, config.translate, size=2)
    image, boxes = affine(image, boxes, scale, tx, ty)
    return hsv_jitter(image, rng, config.hsv_factor), boxes
