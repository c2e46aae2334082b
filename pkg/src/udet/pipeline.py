"""Training loop and batch inference tying the engine, the loss and the data together."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from udet.data import AugmentConfig, augment, image_id_for, load_annotations, load_image, read_manifest
from udet.detect import (
    TargetTensor,
    decode_predictions,
    encode_targets,
    evaluate_loss,
    nms,
    prediction_tensor,
)
from udet.detect.loss import TERMS
from udet.errors import ConfigurationError, DivergenceError
from udet.nn import OptimizerState, ScheduleConfig, lr_schedule, save_checkpoint, sgd_step

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    ids: list
    images: np.ndarray  # (N, H, W, 3)
    boxes: list

    def __len__(self):
        return len(self.ids)


def load_dataset(manifest):
    ids, images, boxes = [], [], []
    for img, ann in read_manifest(manifest):
        ids.append(image_id_for(img))
        images.append(load_image(img))
        boxes.append(load_annotations(ann))
    if images:
        arr = np.stack(images)
    else:
        arr = np.zeros((0, 1, 1, 3))
    return Dataset(ids, arr, boxes)


@dataclass
class TrainConfig:
    epochs: int = 135
    batch_size: int = 64
    momentum: float = 0.9
    decay: float = 0.0005
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    checkpoint_every: int = 10
    seed: int = 0


def format_log_line(epoch, loss, terms):
    parts = [f"epoch={epoch}", f"loss={loss:.6f}"] + [f"{name}={terms[name]:.6f}" for name in TERMS]
    return " ".join(parts)


def train(net, dataset, grid, config, out_dir):
    """Run ``config.epochs`` epochs of SGD, writing checkpoints and ``loss.log`` into ``out_dir``.

    ``weights_0000.udet`` holds the initial parameters, ``final.udet`` the
    latest completed epoch. Returns the per-epoch mean losses. On a
    non-finite loss the last good checkpoint is left in place and
    :class:`DivergenceError` propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(dataset) == 0 and config.epochs > 0:
        raise ConfigurationError("training manifest is empty")
    rng = np.random.default_rng(config.seed)
    state = OptimizerState.for_params(
        net.params, momentum=config.momentum, decay=config.decay, batch_size=config.batch_size
    )
    save_checkpoint(net, out / "weights_0000.udet")
    losses = []
    log_path = out / "loss.log"
    log_path.write_text("")
    for epoch in range(config.epochs):
        lr = lr_schedule(epoch, config.schedule)
        order = rng.permutation(len(dataset))
        total = 0.0
        terms = dict.fromkeys(TERMS, 0.0)
        collisions = 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            images, targets = [], []
            for i in idx:
                image, boxes = augment(dataset.images[i], dataset.boxes[i], rng, config.augment)
                images.append(image)
                targets.append(encode_targets(boxes, grid))
            batch = TargetTensor.stack(targets)
            collisions += batch.collisions
            pred = prediction_tensor(net.forward(np.stack(images), training=True, rng=rng), grid)
            result = evaluate_loss(pred, batch, grid)
            if not np.isfinite(result.total):
                raise DivergenceError(f"non-finite loss at epoch {epoch + 1}; last good checkpoint kept")
            grads = net.backward(result.grad.reshape(-1, *net.spec.output_shape) / len(idx))
            sgd_step(net.params, grads, state, lr)
            total += result.total
            for name in TERMS:
                terms[name] += result.terms[name]
        n = len(dataset)
        mean = total / n
        line = format_log_line(epoch + 1, mean, {k: v / n for k, v in terms.items()})
        with log_path.open("a") as fh:
            fh.write(line + "\n")
        log.info("%s lr=%g", line, lr)
        if collisions:
            log.warning("epoch %d: %d cell collisions after augmentation (larger box kept)", epoch + 1, collisions)
        losses.append(mean)
        if not all(np.all(np.isfinite(p)) for p in net.params):
            raise DivergenceError(f"non-finite parameters after epoch {epoch + 1}")
        if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            save_checkpoint(net, out / f"weights_{epoch + 1:04d}.udet")
        save_checkpoint(net, out / "final.udet")
    return losses


def predict(net, images, grid, batch_size=64):
    """Prediction tensors ``(N, S, S, 5B+C)`` for a stack of images, inference mode."""
    outs = [
        prediction_tensor(net.forward(images[i : i + batch_size]), grid) for i in range(0, len(images), batch_size)
    ]
    return np.concatenate(outs) if outs else np.zeros((0,) + grid.shape)


def detect(net, dataset, grid, score_threshold=0.1, nms_threshold=0.5, use_nms=True, batch_size=64):
    preds = predict(net, dataset.images, grid, batch_size)
    dets = []
    for image_id, pred in zip(dataset.ids, preds):
        found = decode_predictions(pred, grid, score_threshold, image_id)
        dets.extend(nms(found, nms_threshold) if use_nms else found)
    return dets
