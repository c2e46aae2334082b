"""Grid geometry: target encoding, responsibility, and decoding of prediction tensors.

Per-cell layout of a prediction tensor (``S x S x (5B + C)``)::

    [x_0, y_0, sw_0, sh_0, conf_0, ..., x_{B-1}, y_{B-1}, sw_{B-1}, sh_{B-1}, conf_{B-1}, p_0, ..., p_{C-1}]

``x, y`` are the box center offset inside the cell, ``sw, sh`` are the square
roots of the box width and height (as fractions of the image), ``conf`` is the
box confidence, and ``p_c`` the cell's class scores.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from udet.detect.boxes import Detection, iou
from udet.errors import ConfigurationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridConfig:
    S: int = 7
    B: int = 2
    C: int = 20
    lambda_coord: float = 5.0
    lambda_noobj: float = 0.5

    def __post_init__(self):
        if self.S < 1 or self.B < 1 or self.C < 1:
            raise ConfigurationError(f"S, B, C must be >= 1, got S={self.S} B={self.B} C={self.C}")
        if self.lambda_coord <= 0 or self.lambda_noobj <= 0:
            raise ConfigurationError("loss weights must be > 0")

    @property
    def depth(self):
        return 5 * self.B + self.C

    @property
    def num_values(self):
        return self.S * self.S * self.depth

    @property
    def shape(self):
        return (self.S, self.S, self.depth)


def grid_cell_of(cx, cy, S):
    """Return ``(row, col)`` of the cell containing center ``(cx, cy)``; 1.0 maps to ``S - 1``."""
    return min(int(math.floor(cy * S)), S - 1), min(int(math.floor(cx * S)), S - 1)


@dataclass
class TargetTensor:
    """Encoded ground truth for one image (or a stacked batch: leading axis N).

    ``obj``  -- (S, S) bool, a ground-truth center lies in the cell
    ``box``  -- (S, S, 4) target (x offset, y offset, w, h)
    ``gt``   -- (S, S, 4) the assigned ground-truth box in image-fraction corners
    ``cls``  -- (S, S, C) one-hot class
    """

    obj: np.ndarray
    box: np.ndarray
    gt: np.ndarray
    cls: np.ndarray
    collisions: int = 0

    @classmethod
    def stack(cls, targets):
        return cls(
            np.stack([t.obj for t in targets]),
            np.stack([t.box for t in targets]),
            np.stack([t.gt for t in targets]),
            np.stack([t.cls for t in targets]),
            sum(t.collisions for t in targets),
        )


def encode_targets(boxes, cfg):
    """Map each box to the cell holding its center. Two boxes in one cell: the larger area wins."""
    S, C = cfg.S, cfg.C
    obj = np.zeros((S, S), dtype=bool)
    box = np.zeros((S, S, 4))
    gt = np.zeros((S, S, 4))
    onehot = np.zeros((S, S, C))
    area = np.zeros((S, S))
    collisions = 0
    for b in boxes:
        if not 0 <= b.class_id < C:
            raise ConfigurationError(f"class id {b.class_id} outside [0, {C})")
        r, c = grid_cell_of(b.cx, b.cy, S)
        if obj[r, c]:
            collisions += 1
            log.debug("two objects centered in cell (%d, %d); keeping the larger", r, c)
            if b.area <= area[r, c]:
                continue
        obj[r, c] = True
        area[r, c] = b.area
        box[r, c] = (b.cx * S - c, b.cy * S - r, b.w, b.h)
        gt[r, c] = b.corners
        onehot[r, c] = 0.0
        onehot[r, c, b.class_id] = 1.0
    return TargetTensor(obj, box, gt, onehot, collisions)


def decoded_boxes(pred, cfg):
    """Corner-form boxes for every slot: shape ``(..., S, S, B, 4)``."""
    pred = np.asarray(pred, dtype=np.float64)
    S, B = cfg.S, cfg.B
    slots = pred[..., : 5 * B].reshape(pred.shape[:-1] + (B, 5))
    cols = np.arange(S).reshape(S, 1)
    rows = np.arange(S).reshape(S, 1, 1)
    cx = (cols + slots[..., 0]) / S
    cy = (rows + slots[..., 1]) / S
    w = slots[..., 2] ** 2
    h = slots[..., 3] ** 2
    return np.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], axis=-1)


def assign_responsibility(cell_boxes, gt_corners):
    """Index of the predicted box with the highest IOU against ``gt_corners``; ties go to the lowest index."""
    best, best_iou = 0, -1.0
    for j, b in enumerate(cell_boxes):
        v = iou(b, gt_corners)
        if v > best_iou:
            best, best_iou = j, v
    return best


def decode_predictions(pred, cfg, score_threshold=0.1, image_id=""):
    """Every (cell, box, class) with ``class_score * confidence >= score_threshold`` as a Detection."""
    if score_threshold < 0:
        raise ConfigurationError("score threshold must be >= 0")
    pred = np.asarray(pred, dtype=np.float64).reshape(cfg.shape)
    B = cfg.B
    corners = decoded_boxes(pred, cfg)
    conf = pred[..., 4 : 5 * B : 5]
    probs = pred[..., 5 * B :]
    scores = conf[..., :, None] * probs[..., None, :]  # (S, S, B, C)
    dets = []
    for r, c, j, k in zip(*np.nonzero(scores >= score_threshold)):
        x0, y0, x1, y1 = corners[r, c, j]
        dets.append(Detection(int(k), float(scores[r, c, j, k]), float(x0), float(y0), float(x1), float(y1), image_id))
    return dets


def prediction_tensor(output, cfg):
    """Reshape raw network output (flat or spatial) into ``(..., S, S, 5B+C)``."""
    output = np.asarray(output)
    per_image = cfg.num_values
    if output.size % per_image:
        raise ValueError(f"network output of {output.size} values is not a multiple of S*S*(5B+C)={per_image}")
    lead = output.shape[:-3] if output.shape[-3:] == cfg.shape else output.shape[:-1]
    if output.shape[-3:] != cfg.shape and output.shape[-1] != per_image:
        raise ValueError(f"network output shape {output.shape} cannot be read as {cfg.shape}")
    return output.reshape(lead + cfg.shape)

