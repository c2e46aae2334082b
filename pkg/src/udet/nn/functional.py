"""Forward and backward kernels for the layer types.

All tensors are float64 numpy arrays in NHWC layout (batch, height, width,
channels). Convolution is cross-correlation: the kernel is not flipped, so
``out[n, i, j, f] = sum(x_pad[n, i*s + a, j*s + b, c] * w[a, b, c, f]) + bias[f]``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from udet.errors import ConfigurationError

LEAKY_SLOPE = 0.1


def leaky_relu(x):
    """phi(x) = x for x > 0, 0.1 * x otherwise. Works on scalars and arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        return x if x > 0 else LEAKY_SLOPE * x
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def leaky_relu_grad(x):
    """Derivative of :func:`leaky_relu`; the subgradient at 0 is taken as 0.1."""
    if np.ndim(x) == 0:
        return 1.0 if float(x) > 0 else LEAKY_SLOPE
    return np.where(np.asarray(x) > 0, 1.0, LEAKY_SLOPE)


def activate(z, act):
    if act == "linear":
        return z
    if act == "leaky":
        return leaky_relu(z)
    raise ConfigurationError(f"unknown activation {act!r}")


def activate_backward(z, dout, act):
    if act == "linear":
        return dout
    return dout * leaky_relu_grad(z)


def conv_output_size(size, kernel, stride, pad):
    return (size + 2 * pad - kernel) // stride + 1


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x[None], True
    if x.ndim != 4:
        raise ConfigurationError(f"expected HxWxC or NxHxWxC input, got shape {x.shape}")
    return x, False


def _im2col(x_pad, k, stride, ho, wo):
    # (N, H', W', C, k, k) -> (N, Ho, Wo, k, k, C)
    win = sliding_window_view(x_pad, (k, k), axis=(1, 2))
    win = win[:, : (ho - 1) * stride + 1 : stride, : (wo - 1) * stride + 1 : stride]
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))


def conv2d_forward(x, weights, bias, stride=1, pad=0):
    """Convolve ``x`` (HxWxC or NxHxWxC) with a ``(k, k, Cin, F)`` filter bank.

    Returns ``(out, cache)``; ``cache`` feeds :func:`conv2d_backward`.
    """
    x, single = _as_batch(x)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 4 or weights.shape[0] != weights.shape[1]:
        raise ConfigurationError(f"filter bank must be (k, k, Cin, F), got {weights.shape}")
    k, _, cin, nf = weights.shape
    if x.shape[3] != cin:
        raise ConfigurationError(f"input has {x.shape[3]} channels, filters expect {cin}")
    if stride < 1 or k < 1:
        raise ConfigurationError("kernel size and stride must be >= 1")
    n, h, w, _ = x.shape
    ho = conv_output_size(h, k, stride, pad)
    wo = conv_output_size(w, k, stride, pad)
    if ho < 1 or wo < 1:
        raise ConfigurationError(f"kernel {k} with pad {pad} does not fit a {h}x{w} input")
    x_pad = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    cols = _im2col(x_pad, k, stride, ho, wo).reshape(n * ho * wo, k * k * cin)
    out = (cols @ weights.reshape(k * k * cin, nf)).reshape(n, ho, wo, nf)
    out += np.asarray(bias, dtype=np.float64)
    cache = (cols, x_pad.shape, weights, stride, pad, single)
    return (out[0] if single else out), cache


def conv2d_backward(dout, cache):
    """Return ``(dx, dweights, dbias)`` for an upstream gradient ``dout``."""
    cols, pad_shape, weights, stride, pad, single = cache
    dout = np.asarray(dout, dtype=np.float64)
    if single:
        dout = dout[None]
    n, ho, wo, nf = dout.shape
    k, _, cin, _ = weights.shape
    d2 = dout.reshape(n * ho * wo, nf)
    dw = (cols.T @ d2).reshape(weights.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ weights.reshape(k * k * cin, nf).T).reshape(n, ho, wo, k, k, cin)
    dx_pad = np.zeros(pad_shape)
    for a in range(k):
        for b in range(k):
            dx_pad[:, a : a + stride * (ho - 1) + 1 : stride, b : b + stride * (wo - 1) + 1 : stride] += dcols[
                :, :, :, a, b
            ]
    if pad:
        dx_pad = dx_pad[:, pad:-pad, pad:-pad]
    return (dx_pad[0] if single else dx_pad), dw, db


def maxpool_forward(x, size, stride):
    """Max over ``size x size`` windows; ties resolve to the first position in row-major scan order."""
    x, single = _as_batch(x)
    if size < 1 or stride < 1:
        raise ConfigurationError("pool size and stride must be >= 1")
    n, h, w, c = x.shape
    if size > h or size > w:
        raise ConfigurationError(f"pool window {size} larger than {h}x{w} input")
    ho = (h - size) // stride + 1
    wo = (w - size) // stride + 1
    win = sliding_window_view(x, (size, size), axis=(1, 2))
    win = win[:, : (ho - 1) * stride + 1 : stride, : (wo - 1) * stride + 1 : stride]
    flat = win.reshape(n, ho, wo, c, size * size)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (arg, x.shape, size, stride, single)
    return (out[0] if single else out), cache


def maxpool_backward(dout, cache):
    arg, in_shape, size, stride, single = cache
    dout = np.asarray(dout, dtype=np.float64)
    if single:
        dout = dout[None]
    _, ho, wo, _ = dout.shape
    dx = np.zeros(in_shape)
    for a in range(size):
        for b in range(size):
            hit = arg == a * size + b
            dx[:, a : a + stride * (ho - 1) + 1 : stride, b : b + stride * (wo - 1) + 1 : stride] += np.where(
                hit, dout, 0.0
            )
    return dx[0] if single else dx


def fully_connected_forward(x, weights, bias, activation="linear"):
    """Affine map ``x @ W + b`` followed by ``activation``. ``x`` is (L,) or (N, L)."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None]
    if x.ndim != 2 or weights.ndim != 2 or weights.shape[0] != x.shape[1]:
        raise ConfigurationError(f"weights {weights.shape} do not accept input of length {x.shape[-1]}")
    z = x @ weights + np.asarray(bias, dtype=np.float64)
    out = activate(z, activation)
    cache = (x, weights, z, activation, single)
    return (out[0] if single else out), cache


def fully_connected_backward(dout, cache):
    x, weights, z, activation, single = cache
    dout = np.asarray(dout, dtype=np.float64)
    if single:
        dout = dout[None]
    dz = activate_backward(z, dout, activation)
    return ((dz @ weights.T)[0] if single else dz @ weights.T), x.T @ dz, dz.sum(axis=0)


def dropout_forward(x, rate, rng, training=True):
    """Inverted dropout: survivors are scaled by ``1 / (1 - rate)`` so inference is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
    x = np.asarray(x, dtype=np.float64)
    if not training or rate == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask
