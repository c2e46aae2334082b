"""Error-type decomposition of top-ranked detections.

Categories, checked in order for each detection against the ground truth of
its image:

* Correct      -- same class, IOU >= 0.5
* Localization -- same class, 0.1 < IOU < 0.5
* Similar      -- a similar class, IOU > 0.1
* Other        -- any other class, IOU > 0.1
* Background   -- IOU <= 0.1 with every object
"""

from __future__ import annotations

import logging
from enum import Enum

from udet.detect.boxes import iou

log = logging.getLogger(__name__)

CORRECT_IOU = 0.5
OVERLAP_IOU = 0.1


class ErrorType(str, Enum):
    CORRECT = "Correct"
    LOCALIZATION = "Localization"
    SIMILAR = "Similar"
    OTHER = "Other"
    BACKGROUND = "Background"


def parse_similar(text):
    """``"0:1,2:3"`` -> symmetric relation ``{(0, 1), (1, 0), (2, 3), (3, 2)}``."""
    pairs = set()
    for item in filter(None, (s.strip() for s in text.split(","))):
        a, _, b = item.partition(":")
        a, b = int(a), int(b)
        pairs |= {(a, b), (b, a)}
    return frozenset(pairs)


def classify_error(det, gts, similar=frozenset()):
    """Categorise one detection against the ground-truth boxes of its image."""
    same = max((iou(det.corners, g.corners) for g in gts if g.class_id == det.class_id), default=0.0)
    if same >= CORRECT_IOU:
        return ErrorType.CORRECT
    if same > OVERLAP_IOU:
        return ErrorType.LOCALIZATION
    sim = max(
        (iou(det.corners, g.corners) for g in gts if (det.class_id, g.class_id) in similar),
        default=0.0,
    )
    if sim > OVERLAP_IOU:
        return ErrorType.SIMILAR
    other = max((iou(det.corners, g.corners) for g in gts if g.class_id != det.class_id), default=0.0)
    if other > OVERLAP_IOU:
        return ErrorType.OTHER
    return ErrorType.BACKGROUND


def error_breakdown(dets, gts, similar=frozenset()):
    """Percentage of each error type among the top-N detections per class.

    ``N`` is the number of ground-truth objects of the class. Classes with no
    ground truth or no detections are skipped. Returns ``(per_class, average)`` where
    ``per_class`` maps class id to ``{ErrorType: percent}`` and ``average`` is
    the unweighted mean over the reported classes.
    """
    counts = {}
    for boxes in gts.values():
        for g in boxes:
            counts[g.class_id] = counts.get(g.class_id, 0) + 1
    for c in sorted({d.class_id for d in dets} - set(counts)):
        log.info("class %d has no ground truth; skipped in error breakdown", c)
    per_class = {}
    for c in sorted(counts):
        top = sorted((d for d in dets if d.class_id == c), key=lambda d: -d.score)[: counts[c]]
        tally = dict.fromkeys(ErrorType, 0)
        for d in top:
            tally[classify_error(d, gts.get(d.image_id, ()), similar)] += 1
        if not top:
            log.info("class %d has no detections; skipped in error breakdown", c)
            continue
        per_class[c] = {t: 100.0 * k / len(top) for t, k in tally.items()}
    average = {
        t: (sum(p[t] for p in per_class.values()) / len(per_class) if per_class else 0.0) for t in ErrorType
    }
    return per_class, average
