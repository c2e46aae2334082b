"""SGD with momentum and L2 weight decay, plus the warmup/step learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from udet.errors import ConfigurationError, DivergenceError


@dataclass
class OptimizerState:
    momentum: float = 0.9
    decay: float = 0.0005
    batch_size: int = 64
    momentum_buffers: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **kwargs):
        return cls(momentum_buffers=[np.zeros_like(p) for p in params], **kwargs)


def sgd_step(params, grads, state, lr):
    """In-place update: ``v = m*v - lr*(g + decay*p); p = p + v``."""
    if not state.momentum_buffers:
        state.momentum_buffers = [np.zeros_like(p) for p in params]
    if not (len(params) == len(grads) == len(state.momentum_buffers)):
        raise ConfigurationError("params, grads and momentum buffers differ in count")
    for i, (p, g, v) in enumerate(zip(params, grads, state.momentum_buffers)):
        if p.shape != g.shape or p.shape != v.shape:
            raise ConfigurationError(f"parameter {i}: shape {p.shape} vs gradient {g.shape} vs buffer {v.shape}")
        if not np.all(np.isfinite(g)):
            bad = int(np.count_nonzero(~np.isfinite(g)))
            raise DivergenceError(
                f"non-finite gradient in parameter tensor {i} ({bad} of {g.size} values); "
                f"lr={lr:g}, last finite |p|max={np.max(np.abs(p)):.6g}"
            )
        v *= state.momentum
        v -= lr * (g + state.decay * p)
        p += v


@dataclass(frozen=True)
class ScheduleConfig:
    """Warm up linearly from ``lr_low`` to ``lr_high`` over ``warmup`` epochs,
    hold ``lr_high`` for ``steady`` epochs, then ``lr_high/10`` for ``decay1``
    epochs and ``lr_high/100`` for ``decay2`` epochs."""

    lr_low: float = 1e-3
    lr_high: float = 1e-2
    warmup: int = 5
    steady: int = 75
    decay1: int = 30
    decay2: int = 30

    @property
    def total_epochs(self):
        return self.warmup + self.steady + self.decay1 + self.decay2


def lr_schedule(epoch, config=ScheduleConfig()):
    if epoch < 0:
        raise ConfigurationError(f"epoch must be >= 0, got {epoch}")
    c = config
    if epoch < c.warmup:
        return c.lr_low + (c.lr_high - c.lr_low) * epoch / c.warmup
    epoch -= c.warmup
    if epoch < c.steady:
        return c.lr_high
    epoch -= c.steady
    if epoch < c.decay1:
        return c.lr_high / 10
    return c.lr_high / 100
