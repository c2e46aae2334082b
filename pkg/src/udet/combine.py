"""Rescore one detector's boxes with confirmation from a second detector."""

from __future__ import annotations

from dataclasses import dataclass, replace

from udet.detect.boxes import iou
from udet.detect.detfile import sort_detections
from udet.errors import ConfigurationError


@dataclass(frozen=True)
class CombineConfig:
    iou_confirm_threshold: float = 0.5
    boost_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.iou_confirm_threshold <= 1.0:
            raise ConfigurationError(f"iou_confirm_threshold must be in [0, 1], got {self.iou_confirm_threshold}")
        if self.boost_weight < 0:
            raise ConfigurationError(f"boost_weight must be >= 0, got {self.boost_weight}")


def check_class_spaces(primary_classes, confirming_classes):
    """Both files must agree on the class-id space when both declare one."""
    if primary_classes is not None and confirming_classes is not None and primary_classes != confirming_classes:
        raise ConfigurationError(
            f"class-id spaces disagree: primary declares {primary_classes} classes, "
            f"confirming declares {confirming_classes}"
        )


def combine_detections(primary, confirming, config=CombineConfig()):
    """Boost each primary detection by ``weight * y.score * IOU(d, y)``.

    ``y`` is the same-image, same-class confirming detection overlapping
    ``d`` the most; the boost applies only when that IOU reaches the
    threshold. Boxes are never moved. The result is sorted by image id, then
    score descending.
    """
    by_key = {}
    for y in confirming:
        by_key.setdefault((y.image_id, y.class_id), []).append(y)
    out = []
    for d in primary:
        best, best_iou = None, -1.0
        for y in by_key.get((d.image_id, d.class_id), ()):
            v = iou(d.corners, y.corners)
            if v > best_iou:
                best, best_iou = y, v
        if best is not None and best_iou >= config.iou_confirm_threshold:
            d = replace(d, score=d.score + config.boost_weight * best.score * best_iou)
        out.append(d)
    return sort_detections(out)
