"""Run configuration: an INI file whose defaults are the published training hyperparameters.

Relative paths in the file are resolved against the file's directory.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from udet.combine import CombineConfig
from udet.data import AugmentConfig, DatasetSpec
from udet.detect import GridConfig
from udet.errors import ConfigurationError
from udet.nn import NetworkSpec, ScheduleConfig
from udet.pipeline import TrainConfig

NETS_DIR = Path(__file__).parent / "nets"


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    network: Path | None = None
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    train_count: int = 500
    test_count: int = 100
    train_manifest: Path | None = None
    test_manifest: Path | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    dropout: float = 0.5
    score_threshold: float = 0.1
    nms_threshold: float = 0.5
    eval_iou: float = 0.5
    similar: str = ""
    combine: CombineConfig = field(default_factory=CombineConfig)
    seed: int = 0
    out: Path = Path("udet-out")

    def check_classes(self):
        if len(self.dataset.classes) != self.grid.C:
            raise ConfigurationError(f"[data] lists {len(self.dataset.classes)} classes but [grid] C = {self.grid.C}")

    def network_spec(self):
        if self.network is None:
            raise ConfigurationError("no network spec configured ([network] spec = PATH)")
        if not self.network.exists():
            raise ConfigurationError(f"network spec {self.network} does not exist")
        spec = NetworkSpec.load(self.network)
        layers = tuple(replace(l, rate=self.dropout) if l.kind == "dropout" else l for l in spec.layers)
        spec = NetworkSpec(spec.input_shape, layers)
        out = spec.output_shape
        if math.prod(out) != self.grid.num_values:
            raise ConfigurationError(
                f"network output {out} has {math.prod(out)} values; "
                f"grid S={self.grid.S} B={self.grid.B} C={self.grid.C} needs {self.grid.num_values}"
            )
        return spec


def _path(base, raw):
    if not raw:
        return None
    if raw.startswith("pkg:"):
        return NETS_DIR / raw[4:]
    p = Path(raw)
    return p if p.is_absolute() else base / p


def _pair(raw, cast):
    parts = [cast(v) for v in raw.replace(",", " ").split()]
    if len(parts) != 2:
        raise ConfigurationError(f"expected two values, got {raw!r}")
    return tuple(parts)


def load_config(path=None, seed=None, out=None):
    """Build a :class:`RunConfig` from ``path`` (or pure defaults), then apply CLI overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file {path} does not exist")
        cp.read(path, encoding="utf-8")
        base = path.resolve().parent
    for section in ("grid", "network", "data", "train", "augment", "detect", "eval", "combine", "run"):
        if not cp.has_section(section):
            cp.add_section(section)
    try:
        return _build(cp, base, seed, out)
    except ValueError as exc:
        raise ConfigurationError(f"{path or 'config'}: {exc}") from None


def _build(cp, base, seed, out):
    g, n, d, t, a = cp["grid"], cp["network"], cp["data"], cp["train"], cp["augment"]
    det, ev, cm, run = cp["detect"], cp["eval"], cp["combine"], cp["run"]
    grid = GridConfig(
        S=g.getint("S", 7),
        B=g.getint("B", 2),
        C=g.getint("C", 20),
        lambda_coord=g.getfloat("lambda_coord", 5.0),
        lambda_noobj=g.getfloat("lambda_noobj", 0.5),
    )
    seed = run.getint("seed", 0) if seed is None else seed
    out = _path(base, run.get("out", "udet-out")) if out is None else Path(out)
    dataset = DatasetSpec(
        image_size=d.getint("image_size", 64),
        classes=tuple(c.strip() for c in d.get("classes", "circle,square,triangle").split(",") if c.strip()),
        objects=_pair(d.get("objects", "1,3"), int),
        object_size=_pair(d.get("object_size", "0.25,0.5"), float),
        collision_free=d.getboolean("collision_free", True),
        grid=grid.S,
        seed=seed,
    )
    scale = _pair(a.get("scale", "0.8,1.2"), float)
    augment = AugmentConfig(
        scale=scale,
        translate=a.getfloat("jitter", 0.2),
        hsv_factor=a.getfloat("hsv_factor", 1.5),
        enabled=a.getboolean("enabled", True),
    )
    if not 0 < scale[0] <= scale[1] or augment.translate < 0 or augment.hsv_factor < 1:
        raise ConfigurationError("[augment] needs 0 < scale_min <= scale_max, jitter >= 0, hsv_factor >= 1")
    schedule = ScheduleConfig(
        lr_low=t.getfloat("lr_low", 1e-3),
        lr_high=t.getfloat("lr_high", 1e-2),
        warmup=t.getint("warmup", 5),
        steady=t.getint("steady", 75),
        decay1=t.getint("decay1", 30),
        decay2=t.getint("decay2", 30),
    )
    train = TrainConfig(
        epochs=t.getint("epochs", 135),
        batch_size=t.getint("batch_size", 64),
        momentum=t.getfloat("momentum", 0.9),
        decay=t.getfloat("decay", 0.0005),
        schedule=schedule,
        augment=augment,
        checkpoint_every=t.getint("checkpoint_every", 10),
        seed=seed,
    )
    if train.epochs < 0 or train.batch_size < 1:
        raise ConfigurationError("[train] epochs must be >= 0 and batch_size >= 1")
    return RunConfig(
        grid=grid,
        network=_path(base, n.get("spec", "")),
        dataset=dataset,
        train_count=d.getint("train_count", 500),
        test_count=d.getint("test_count", 100),
        train_manifest=_path(base, d.get("train_manifest", "")),
        test_manifest=_path(base, d.get("test_manifest", "")),
        train=train,
        dropout=t.getfloat("dropout", 0.5),
        score_threshold=det.getfloat("score_threshold", 0.1),
        nms_threshold=det.getfloat("nms_threshold", 0.5),
        eval_iou=ev.getfloat("iou_threshold", 0.5),
        similar=ev.get("similar", ""),
        combine=CombineConfig(cm.getfloat("iou_confirm_threshold", 0.5), cm.getfloat("boost_weight", 1.0)),
        seed=seed,
        out=out,
    )
