"""Scene builders and check drivers shared by the unit and acceptance suites."""

from __future__ import annotations

import math

import numpy as np

from oracles import central_diff, reference_loss
from udet.detect import Detection, GroundTruthBox, encode_targets, evaluate_loss


def random_scene(rng, cfg, max_boxes=4):
    """Boxes with distinct center cells."""
    cells = rng.permutation(cfg.S * cfg.S)[: rng.integers(0, max_boxes + 1)]
    boxes = []
    for cell in cells:
        r, c = divmod(int(cell), cfg.S)
        cx = (c + rng.uniform(0.05, 0.95)) / cfg.S
        cy = (r + rng.uniform(0.05, 0.95)) / cfg.S
        boxes.append(GroundTruthBox(int(rng.integers(cfg.C)), cx, cy, rng.uniform(0.05, 0.6), rng.uniform(0.05, 0.6)))
    return boxes


def random_pred(rng, cfg):
    pred = rng.uniform(-1, 1, cfg.shape)
    for j in range(cfg.B):
        pred[..., 5 * j : 5 * j + 2] = rng.uniform(0, 1, (cfg.S, cfg.S, 2))
        pred[..., 5 * j + 2 : 5 * j + 4] = rng.uniform(0.2, 0.8, (cfg.S, cfg.S, 2))
    return pred


def as_tuples(boxes):
    return [(b.class_id, b.cx, b.cy, b.w, b.h) for b in boxes]


def perfect_prediction(boxes, cfg, other_conf=0.0):
    t = encode_targets(boxes, cfg)
    pred = np.zeros(cfg.shape)
    for r, c in zip(*np.nonzero(t.obj)):
        x, y, w, h = t.box[r, c]
        pred[r, c, 0:4] = (x, y, math.sqrt(w), math.sqrt(h))
        pred[r, c, 4] = 1.0  # decoded box equals the gt, so IOU is 1
        pred[r, c, 5 + 4] = other_conf
        pred[r, c, 5 * cfg.B :] = t.cls[r, c]
    return pred, t


def check_loss_gradient(seed, cfg, h=1e-4):
    """Analytic gradient vs central differences of the loop oracle with frozen responsibility.

    Coordinates whose perturbation changes a responsibility argmax are skipped.
    Returns ``(max relative error, checked, skipped)``.
    """
    rng = np.random.default_rng(seed)
    boxes = random_scene(rng, cfg)
    pred = random_pred(rng, cfg)
    tuples = as_tuples(boxes)
    args = (cfg.S, cfg.B, cfg.C, cfg.lambda_coord, cfg.lambda_noobj)
    _, resp, conf_t = reference_loss(pred, tuples, *args)
    grad = evaluate_loss(pred, encode_targets(boxes, cfg), cfg).grad

    worst, checked, skipped = 0.0, 0, 0
    flat = pred.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flipped = False
        for step in (h, -h):
            flat[i] = old + step
            flipped |= reference_loss(pred, tuples, *args)[1] != resp
        flat[i] = old
        if flipped:
            skipped += 1
            continue
        num = central_diff(lambda: reference_loss(pred, tuples, *args, resp, conf_t)[0], pred, h, [i])[i]
        worst = max(worst, abs(grad.reshape(-1)[i] - num) / max(abs(num), abs(grad.reshape(-1)[i]), 1e-6))
        checked += 1
    return worst, checked, skipped


def kink_pattern(net):
    """Leaky-ReLU signs and maxpool winners from the last forward pass.

    Two forward passes with equal patterns lie on the same smooth piece of the network.
    """
    pattern = []
    for layer, cache in zip(net.spec.layers, net._caches):
        if layer.kind == "conv" and layer.act == "leaky":
            pattern.append(cache[1] > 0)
        elif layer.kind == "fully_connected" and layer.act == "leaky":
            pattern.append(cache[2] > 0)
        elif layer.kind == "maxpool":
            pattern.append(cache[0])
    return pattern


def crosses_kink(net, x, tensor, index, h):
    """True when moving ``tensor[index]`` by +-h changes the network's activation pattern."""
    net.forward(x)
    base = kink_pattern(net)
    flat = tensor.reshape(-1)
    old = flat[index]
    try:
        for step in (h, -h):
            flat[index] = old + step
            net.forward(x)
            if any(not np.array_equal(a, b) for a, b in zip(base, kink_pattern(net))):
                return True
    finally:
        flat[index] = old
    return False


def random_instance(rng, max_dets=10):
    """A few images with same-class ground truth and jittered / spurious detections."""
    gts, dets = {}, []
    for im in range(rng.integers(1, 4)):
        name = f"im{im}"
        boxes = []
        for _ in range(rng.integers(0, 4)):
            x, y = rng.uniform(0.1, 0.6, 2)
            boxes.append(GroundTruthBox.from_corners(0, x, y, x + 0.3, y + 0.3))
        gts[name] = boxes
    names = list(gts)
    for _ in range(rng.integers(0, max_dets + 1)):
        name = names[rng.integers(len(names))]
        if gts[name] and rng.random() < 0.7:
            x0, y0, x1, y1 = gts[name][rng.integers(len(gts[name]))].corners
            j = rng.uniform(-0.1, 0.1, 4)
            dets.append(Detection(0, float(rng.random()), x0 + j[0], y0 + j[1], x1 + j[2], y1 + j[3], name))
        else:
            x, y = rng.uniform(0, 0.7, 2)
            dets.append(Detection(0, float(rng.random()), x, y, x + 0.3, y + 0.3, name))
    return dets, gts
