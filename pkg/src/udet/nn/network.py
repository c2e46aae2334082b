"""Network description format, shape inference, and a sequential trainable network.

A network spec is plain text, one layer per line::

    input height=64 width=64 channels=3
    conv filters=16 size=3 stride=1 pad=1 act=leaky
    maxpool size=2 stride=2
    flatten
    fully_connected units=256 act=leaky
    dropout rate=0.5
    fully_connected units=208 act=linear

Blank lines and ``#`` comments are ignored. :meth:`NetworkSpec.to_text`
writes the canonical form (every parameter spelled out, fixed key order),
which is what checkpoints embed and compare.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from udet.errors import ConfigurationError, ParseError, StateError
from udet.nn import functional as F

CHECKPOINT_MAGIC = b"UDET1\n"

_KEYS = {
    "conv": ("filters", "size", "stride", "pad", "act"),
    "maxpool": ("size", "stride"),
    "fully_connected": ("units", "act"),
    "dropout": ("rate",),
    "flatten": (),
}
_DEFAULTS = {
    "conv": {"stride": 1, "pad": 0, "act": "leaky"},
    "maxpool": {"stride": None},
    "fully_connected": {"act": "leaky"},
    "dropout": {},
    "flatten": {},
}
_ALIASES = {"connected": "fully_connected", "fc": "fully_connected", "convolutional": "conv"}
_ACTIVATIONS = ("leaky", "linear")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filters: int = 0
    size: int = 0
    stride: int = 1
    pad: int = 0
    units: int = 0
    act: str = "leaky"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in _KEYS:
            raise ConfigurationError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("conv", "maxpool") and (self.size < 1 or self.stride < 1):
            raise ConfigurationError(f"{self.kind}: kernel size and stride must be >= 1")
        if self.kind == "conv" and (self.filters < 1 or self.pad < 0):
            raise ConfigurationError("conv: filters must be >= 1 and pad >= 0")
        if self.kind == "fully_connected" and self.units < 1:
            raise ConfigurationError("fully_connected: units must be >= 1")
        if self.kind in ("conv", "fully_connected") and self.act not in _ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {_ACTIVATIONS}, got {self.act!r}")
        if self.kind == "dropout" and not 0.0 <= self.rate < 1.0:
            raise ConfigurationError(f"dropout rate must be in [0, 1), got {self.rate}")

    @property
    def has_params(self):
        return self.kind in ("conv", "fully_connected")

    def to_text(self):
        parts = [self.kind]
        for key in _KEYS[self.kind]:
            value = getattr(self, key)
            parts.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
        return " ".join(parts)

    @classmethod
    def from_text(cls, line):
        tokens = line.split()
        kind = _ALIASES.get(tokens[0], tokens[0])
        if kind not in _KEYS:
            raise ConfigurationError(f"unknown layer kind {tokens[0]!r}")
        values = dict(_DEFAULTS[kind])
        for tok in tokens[1:]:
            key, sep, raw = tok.partition("=")
            if not sep or key not in _KEYS[kind]:
                raise ConfigurationError(f"{kind}: unexpected parameter {tok!r}")
            values[key] = raw
        missing = [k for k in _KEYS[kind] if k not in values]
        if missing:
            raise ConfigurationError(f"{kind}: missing parameter(s) {', '.join(missing)}")
        if kind == "maxpool" and values["stride"] is None:
            values["stride"] = values["size"]
        kwargs = {}
        for key, raw in values.items():
            if key == "act":
                kwargs[key] = str(raw)
            elif key == "rate":
                kwargs[key] = float(raw)
            else:
                try:
                    kwargs[key] = int(raw)
                except ValueError:
                    raise ConfigurationError(f"{kind}: {key} must be an integer, got {raw!r}") from None
        return cls(kind=kind, **kwargs)


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple  # (height, width, channels)
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigurationError(f"input shape must be (height, width, channels), got {self.input_shape}")

    def shapes(self):
        """Per-layer output shapes, validating that consecutive layers compose."""
        shape = self.input_shape
        out = []
        for i, layer in enumerate(self.layers):
            shape = _layer_output_shape(layer, shape, i)
            out.append(shape)
        if not self.layers:
            raise ConfigurationError("network has no layers")
        last = self.layers[-1]
        if not last.has_params or last.act != "linear":
            raise ConfigurationError("final layer must be conv or fully_connected with act=linear")
        return out

    @property
    def output_shape(self):
        return self.shapes()[-1]

    def param_shapes(self):
        shapes = []
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            if layer.kind == "conv":
                shapes += [(layer.size, layer.size, shape[2], layer.filters), (layer.filters,)]
            elif layer.kind == "fully_connected":
                shapes += [(shape[0], layer.units), (layer.units,)]
            shape = _layer_output_shape(layer, shape, i)
        return shapes

    def to_text(self):
        h, w, c = self.input_shape
        lines = [f"input height={h} width={w} channels={c}"]
        lines += [layer.to_text() for layer in self.layers]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        input_shape = None
        layers = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                if line.split()[0] == "input":
                    fields = dict(tok.split("=", 1) for tok in line.split()[1:])
                    input_shape = (int(fields["height"]), int(fields["width"]), int(fields["channels"]))
                else:
                    layers.append(LayerSpec.from_text(line))
            except (KeyError, ValueError) as exc:
                raise ConfigurationError(f"network spec line {lineno}: {exc}") from None
        if input_shape is None:
            raise ConfigurationError("network spec has no 'input' line")
        spec = cls(input_shape, tuple(layers))
        spec.shapes()
        return spec

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())


def _layer_output_shape(layer, shape, index):
    where = f"layer {index} ({layer.kind})"
    if layer.kind == "conv":
        if len(shape) != 3:
            raise ConfigurationError(f"{where} expects a HxWxC input, got {shape}")
        ho = F.conv_output_size(shape[0], layer.size, layer.stride, layer.pad)
        wo = F.conv_output_size(shape[1], layer.size, layer.stride, layer.pad)
        if ho < 1 or wo < 1:
            raise ConfigurationError(f"{where}: kernel does not fit input {shape}")
        return (ho, wo, layer.filters)
    if layer.kind == "maxpool":
        if len(shape) != 3:
            raise ConfigurationError(f"{where} expects a HxWxC input, got {shape}")
        if layer.size > shape[0] or layer.size > shape[1]:
            raise ConfigurationError(f"{where}: window {layer.size} larger than input {shape}")
        return ((shape[0] - layer.size) // layer.stride + 1, (shape[1] - layer.size) // layer.stride + 1, shape[2])
    if layer.kind == "flatten":
        return (int(np.prod(shape)),)
    if layer.kind == "fully_connected":
        if len(shape) != 1:
            raise ConfigurationError(f"{where} expects a flat input; insert 'flatten' before it")
        return (layer.units,)
    return shape


def glorot_uniform(shape, rng):
    if len(shape) == 4:
        k, _, cin, nf = shape
        fan_in, fan_out = k * k * cin, k * k * nf
    else:
        fan_in, fan_out = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Network:
    """Sequential network built from a :class:`NetworkSpec`.

    ``params`` is a flat list of arrays in declaration order (weights then
    bias for each conv / fully_connected layer). Gradients from
    :meth:`backward` use the same order.
    """

    def __init__(self, spec, params=None, seed=0):
        self.spec = spec
        shapes = spec.param_shapes()
        spec.shapes()
        if params is None:
            rng = np.random.default_rng(seed)
            params = [glorot_uniform(s, rng) if len(s) > 1 else np.zeros(s) for s in shapes]
        params = [np.asarray(p, dtype=np.float64) for p in params]
        if [p.shape for p in params] != [tuple(s) for s in shapes]:
            raise ConfigurationError("parameter shapes do not match the network spec")
        self.params = params
        self._caches = None
        self._single = False

    @classmethod
    def zeros(cls, spec):
        return cls(spec, [np.zeros(s) for s in spec.param_shapes()])

    def copy(self):
        return Network(self.spec, [p.copy() for p in self.params])

    def forward(self, x, training=False, rng=None):
        """Run the network on one image (HxWxC) or a batch (NxHxWxC)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 3
        if single:
            x = x[None]
        if x.ndim != 4 or x.shape[1:] != self.spec.input_shape:
            raise ConfigurationError(f"input shape {x.shape[1:]} != network input {self.spec.input_shape}")
        if training and rng is None:
            rng = np.random.default_rng()
        caches = []
        p = 0
        for layer in self.spec.layers:
            if layer.kind == "conv":
                z, cache = F.conv2d_forward(x, self.params[p], self.params[p + 1], layer.stride, layer.pad)
                x = F.activate(z, layer.act)
                caches.append((cache, z))
                p += 2
            elif layer.kind == "fully_connected":
                x, cache = F.fully_connected_forward(x, self.params[p], self.params[p + 1], layer.act)
                caches.append(cache)
                p += 2
            elif layer.kind == "maxpool":
                x, cache = F.maxpool_forward(x, layer.size, layer.stride)
                caches.append(cache)
            elif layer.kind == "dropout":
                x, mask = F.dropout_forward(x, layer.rate, rng, training)
                caches.append(mask)
            else:
                caches.append(x.shape)
                x = x.reshape(x.shape[0], -1)
        self._caches = caches
        self._single = single
        return x[0] if single else x

    def backward(self, dout):
        """Back-propagate ``dout`` (gradient w.r.t. the last forward output) to parameter gradients."""
        if self._caches is None:
            raise StateError("backward called before forward")
        dout = np.asarray(dout, dtype=np.float64)
        if self._single:
            dout = dout[None]
        grads = [None] * len(self.params)
        p = len(self.params)
        for layer, cache in zip(reversed(self.spec.layers), reversed(self._caches)):
            if layer.kind == "conv":
                conv_cache, z = cache
                dz = F.activate_backward(z, dout, layer.act)
                dout, dw, db = F.conv2d_backward(dz, conv_cache)
                p -= 2
                grads[p], grads[p + 1] = dw, db
            elif layer.kind == "fully_connected":
                dout, dw, db = F.fully_connected_backward(dout, cache)
                p -= 2
                grads[p], grads[p + 1] = dw, db
            elif layer.kind == "maxpool":
                dout = F.maxpool_backward(dout, cache)
            elif layer.kind == "dropout":
                dout = F.dropout_backward(dout, cache)
            else:
                dout = dout.reshape(cache)
        return grads

    @property
    def num_values(self):
        return sum(p.size for p in self.params)


def save_checkpoint(net, path):
    """Write magic, canonical spec text, then every parameter as little-endian float64."""
    spec_bytes = net.spec.to_text().encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(f"{len(spec_bytes)}\n".encode("ascii"))
    buf.write(spec_bytes)
    for p in net.params:
        buf.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_checkpoint_spec(path):
    data = Path(path).read_bytes()
    spec_text, _ = _split_checkpoint(data, path)
    return spec_text


def _split_checkpoint(data, path):
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ParseError(f"{path}: byte 0: missing UDET1 magic")
    off = len(CHECKPOINT_MAGIC)
    nl = data.find(b"\n", off)
    if nl < 0:
        raise ParseError(f"{path}: byte {off}: missing spec length")
    try:
        n = int(data[off:nl])
    except ValueError:
        raise ParseError(f"{path}: byte {off}: bad spec length") from None
    start = nl + 1
    if len(data) < start + n:
        raise ParseError(f"{path}: byte {len(data)}: truncated spec text")
    return data[start : start + n].decode("utf-8"), start + n


def load_checkpoint(path, spec=None):
    """Load a checkpoint; if ``spec`` is given its canonical text must match byte for byte."""
    data = Path(path).read_bytes()
    spec_text, off = _split_checkpoint(data, path)
    if spec is not None and spec.to_text() != spec_text:
        raise ConfigurationError(
            f"checkpoint spec does not match configured spec\n--- checkpoint ---\n{spec_text}"
            f"--- configured ---\n{spec.to_text()}"
        )
    stored = NetworkSpec.from_text(spec_text)
    shapes = stored.param_shapes()
    count = sum(int(np.prod(s)) for s in shapes)
    if len(data) - off != 8 * count:
        raise ParseError(f"{path}: byte {len(data)}: expected {8 * count} parameter bytes, found {len(data) - off}")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(np.float64)
    params = []
    pos = 0
    for s in shapes:
        size = int(np.prod(s))
        params.append(flat[pos : pos + size].reshape(s).copy())
        pos += size
    return Network(stored, params)

