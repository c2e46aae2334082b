"""Detection matching, average precision, and precision-recall curves.

AP is computed in exact rational arithmetic (precision and recall are ratios
of integer counts) and rounded to float once at the end, so the result does
not depend on summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from udet.detect.boxes import iou
from udet.errors import UndefinedMetricError

TRUE_POSITIVE = "true_positive"
FALSE_POSITIVE = "false_positive"


@dataclass(frozen=True)
class MatchResult:
    image_id: str
    class_id: int
    score: float
    outcome: str
    matched_gt: int | None = None

    @property
    def is_tp(self):
        return self.outcome == TRUE_POSITIVE


def match_detections(dets, gts, iou_threshold=0.5):
    """Greedy VOC-style matching.

    ``gts`` maps image id to a list of ground-truth boxes. Detections are
    visited by descending score (stable); each one claims the unmatched
    same-class ground truth with the highest IOU if that IOU reaches
    ``iou_threshold`` (ties: lower index), else it is a false positive.
    Results come back in the visiting order.
    """
    matched = set()
    results = []
    for d in sorted(dets, key=lambda d: -d.score):
        best, best_iou = None, -1.0
        for k, g in enumerate(gts.get(d.image_id, ())):
            if g.class_id != d.class_id or (d.image_id, k) in matched:
                continue
            v = iou(d.corners, g.corners)
            if v > best_iou:
                best, best_iou = k, v
        if best is not None and best_iou >= iou_threshold:
            matched.add((d.image_id, best))
            results.append(MatchResult(d.image_id, d.class_id, d.score, TRUE_POSITIVE, best))
        else:
            results.append(MatchResult(d.image_id, d.class_id, d.score, FALSE_POSITIVE))
    return results


def _cumulative(matches):
    tp = fp = 0
    for m in matches:
        if m.is_tp:
            tp += 1
        else:
            fp += 1
        yield tp, fp


def average_precision_exact(matches, gt_count, eleven_point=False):
    """AP as a :class:`Fraction`. ``matches`` must be in descending score order for one class."""
    if gt_count <= 0:
        return Fraction(0)
    counts = list(_cumulative(matches))
    if eleven_point:
        total = Fraction(0)
        for t in range(11):
            cands = [Fraction(tp, tp + fp) for tp, fp in counts if Fraction(tp, gt_count) >= Fraction(t, 10)]
            total += max(cands, default=Fraction(0))
        return total / 11
    # Precision envelope: running max from the right, taken at each rank where recall increases.
    envelope = Fraction(0)
    steps = []
    for tp, fp in reversed(counts):
        envelope = max(envelope, Fraction(tp, tp + fp))
        steps.append((tp, envelope))
    area = Fraction(0)
    last_tp = 0
    for tp, env in reversed(steps):
        if tp > last_tp:
            area += Fraction(tp - last_tp, gt_count) * env
            last_tp = tp
    return area


def average_precision(matches, gt_count, eleven_point=False):
    """All-point interpolated AP (or the 11-point VOC-2007 variant) for one class."""
    return float(average_precision_exact(matches, gt_count, eleven_point))


def mean_ap(per_class_ap, gt_counts=None):
    """Unweighted mean over classes that have at least one ground-truth instance."""
    if gt_counts is None:
        values = list(per_class_ap.values())
    else:
        values = [ap for c, ap in per_class_ap.items() if gt_counts.get(c, 0) > 0]
    if not values:
        raise UndefinedMetricError("mAP undefined: no class has ground-truth instances")
    return sum(values) / len(values)


def pr_curve(matches, gt_count):
    """One ``(recall, precision)`` point per detection in ranked order."""
    if gt_count <= 0:
        return [(0.0, tp / (tp + fp)) for tp, fp in _cumulative(matches)]
    return [(tp / gt_count, tp / (tp + fp)) for tp, fp in _cumulative(matches)]


def format_pr_curve(points):
    return "recall\tprecision\n" + "".join(f"{r:.9g}\t{p:.9g}\n" for r, p in points)


@dataclass
class ClassResult:
    class_id: int
    gt_count: int
    det_count: int
    ap: float
    pr: list


def evaluate(dets, gts, num_classes=None, iou_threshold=0.5, eleven_point=False):
    """Per-class results and mAP over a detection set.

    Returns ``(results, mAP)`` with ``results`` keyed by class id.
    """
    gt_counts = {}
    for boxes in gts.values():
        for g in boxes:
            gt_counts[g.class_id] = gt_counts.get(g.class_id, 0) + 1
    classes = set(gt_counts) | {d.class_id for d in dets}
    if num_classes is not None:
        classes |= set(range(num_classes))
    matches = match_detections(dets, gts, iou_threshold)
    results = {}
    for c in sorted(classes):
        mc = [m for m in matches if m.class_id == c]
        n = gt_counts.get(c, 0)
        results[c] = ClassResult(c, n, len(mc), average_precision(mc, n, eleven_point), pr_curve(mc, n))
    return results, mean_ap({c: r.ap for c, r in results.items()}, gt_counts)
