from __future__ import annotations

from udet.detect.boxes import iou


def nms(dets, iou_threshold=0.5):
    """Greedy per-class non-maximal suppression.

    Within each class, boxes are visited by descending score (ties keep input
    order); a box is dropped if its IOU with an already kept box of the same
    class exceeds ``iou_threshold``. The survivors come back sorted by score,
    descending, with input order breaking ties.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    kept_by_class = {}
    keep = []
    for i in order:
        d = dets[i]
        kept = kept_by_class.setdefault((d.image_id, d.class_id), [])
        if any(iou(d.corners, k.corners) > iou_threshold for k in kept):
            continue
        kept.append(d)
        keep.append(i)
    return [dets[i] for i in keep]
