"""Box records and intersection-over-union."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from udet.errors import ConfigurationError


@dataclass(frozen=True)
class GroundTruthBox:
    """An annotated object. Center and extent are fractions of the image size."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ConfigurationError(f"class id must be >= 0, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ConfigurationError(f"box center ({self.cx}, {self.cy}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ConfigurationError(f"box extent ({self.w}, {self.h}) outside (0, 1]")

    @property
    def corners(self):
        return (self.cx - self.w / 2, self.cy - self.h / 2, self.cx + self.w / 2, self.cy + self.h / 2)

    @property
    def area(self):
        return self.w * self.h

    @classmethod
    def from_corners(cls, class_id, x_min, y_min, x_max, y_max):
        return cls(class_id, (x_min + x_max) / 2, (y_min + y_max) / 2, x_max - x_min, y_max - y_min)


@dataclass(frozen=True)
class Detection:
    """One scored box in corner form; ``image_id`` ties it to a dataset image."""

    class_id: int
    score: float
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    image_id: str = ""

    @property
    def corners(self):
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def iou(a, b):
    """Intersection over union of two ``(x_min, y_min, x_max, y_max)`` boxes.

    Returns 0 when the union has zero area.
    """
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0:
        return 0.0
    return inter / union


def iou_many(a, b):
    """Vectorised IOU: ``a`` and ``b`` broadcast over leading dims, last dim = 4 corners."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    iw = np.clip(np.minimum(a[..., 2], b[..., 2]) - np.maximum(a[..., 0], b[..., 0]), 0, None)
    ih = np.clip(np.minimum(a[..., 3], b[..., 3]) - np.maximum(a[..., 1], b[..., 1]), 0, None)
    inter = iw * ih
    union = (a[..., 2] - a[..., 0]) * (a[..., 3] - a[..., 1]) + (b[..., 2] - b[..., 0]) * (b[..., 3] - b[..., 1]) - inter
    safe = np.where(union > 0, union, 1.0)
    return np.where(union > 0, inter / safe, 0.0)
