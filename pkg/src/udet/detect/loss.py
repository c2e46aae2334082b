"""Sum-squared multi-part detection loss with its analytic gradient.

Five terms, summed over cells ``i`` and box slots ``j``::

    coord  = l_coord * sum_resp [(x - x^)^2 + (y - y^)^2]
    size   = l_coord * sum_resp [(sqrt(w) - sw)^2 + (sqrt(h) - sh)^2]
    conf   =           sum_resp (IOU - C^)^2
    noobj  = l_noobj * sum_other (0 - C^)^2
    class  =           sum_obj-cells sum_c (p(c) - p^(c))^2

``resp`` is the one slot per object cell whose decoded box currently has the
highest IOU with the ground truth; ``other`` is every remaining slot, so the
two sets partition all ``S*S*B`` slots. The confidence target IOU is a
constant for differentiation purposes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from udet.detect.boxes import iou_many
from udet.detect.grid import decoded_boxes
from udet.errors import ConfigurationError, NumericError

TERMS = ("coord", "size", "conf", "noobj", "class")


@dataclass
class Assignment:
    responsible: np.ndarray  # (..., S, S) int slot index, meaningful where obj
    conf_target: np.ndarray  # (..., S, S) IOU of the responsible box


@dataclass
class LossBreakdown:
    total: float
    grad: np.ndarray
    terms: dict
    assignment: Assignment


def assign(pred, targets, cfg):
    """Pick the responsible slot in every object cell and freeze its IOU as the confidence target."""
    ious = iou_many(decoded_boxes(pred, cfg), targets.gt[..., None, :])
    responsible = np.argmax(ious, axis=-1)
    conf_target = np.take_along_axis(ious, responsible[..., None], axis=-1)[..., 0]
    return Assignment(responsible, np.where(targets.obj, conf_target, 0.0))


def evaluate_loss(pred, targets, cfg, assignment=None):
    """Loss, gradient w.r.t. ``pred``, per-term sums, and the responsibility used.

    ``pred`` is one ``(S, S, 5B+C)`` tensor or a batch ``(N, S, S, 5B+C)``; the
    returned loss is summed over the batch. Pass ``assignment`` to reuse a
    frozen responsibility / confidence target instead of recomputing it.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape[-3:] != cfg.shape or pred.shape[:-3] != targets.obj.shape[:-2]:
        raise ConfigurationError(f"prediction shape {pred.shape} does not match grid {cfg.shape} / targets")
    if not np.all(np.isfinite(pred)):
        raise NumericError("prediction tensor contains non-finite values")
    B = cfg.B
    if assignment is None:
        assignment = assign(pred, targets, cfg)

    slots = pred[..., : 5 * B].reshape(pred.shape[:-1] + (B, 5))
    probs = pred[..., 5 * B :]
    obj = targets.obj.astype(np.float64)
    resp = (np.arange(B) == assignment.responsible[..., None]) & targets.obj[..., None]
    resp_f = resp.astype(np.float64)

    d_slots = np.zeros_like(slots)

    dxy = slots[..., 0:2] - targets.box[..., None, 0:2]
    coord = cfg.lambda_coord * np.sum(resp_f[..., None] * dxy**2)
    d_slots[..., 0:2] = 2 * cfg.lambda_coord * resp_f[..., None] * dxy

    dwh = slots[..., 2:4] - np.sqrt(targets.box[..., None, 2:4])
    size = cfg.lambda_coord * np.sum(resp_f[..., None] * dwh**2)
    d_slots[..., 2:4] = 2 * cfg.lambda_coord * resp_f[..., None] * dwh

    dconf = slots[..., 4] - assignment.conf_target[..., None]
    conf = np.sum(resp_f * dconf**2)
    other = 1.0 - resp_f
    noobj = cfg.lambda_noobj * np.sum(other * slots[..., 4] ** 2)
    d_slots[..., 4] = 2 * resp_f * dconf + 2 * cfg.lambda_noobj * other * slots[..., 4]

    dp = probs - targets.cls
    cls_term = np.sum(obj[..., None] * dp**2)
    d_probs = 2 * obj[..., None] * dp

    grad = np.concatenate([d_slots.reshape(pred.shape[:-1] + (5 * B,)), d_probs], axis=-1)
    terms = {"coord": float(coord), "size": float(size), "conf": float(conf), "noobj": float(noobj), "class": float(cls_term)}
    total = coord + size + conf + noobj + cls_term
    return LossBreakdown(float(total), grad, terms, assignment)


def yolo_loss(pred, targets, cfg, assignment=None):
    """Return ``(loss, grad)``; see :func:`evaluate_loss`."""
    out = evaluate_loss(pred, targets, cfg, assignment)
    return out.total, out.grad
