"""Synthetic shapes dataset: solid circles, squares and triangles on flat backgrounds."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from udet.data.annotations import save_annotations, write_manifest
from udet.data.ppm import save_image
from udet.detect.boxes import GroundTruthBox
from udet.detect.grid import grid_cell_of
from udet.errors import ConfigurationError

SHAPES = ("circle", "square", "triangle")
_PLACEMENT_TRIES = 200
_MIN_CONTRAST = 0.35


@dataclass(frozen=True)
class DatasetSpec:
    image_size: int = 64
    classes: tuple = SHAPES
    objects: tuple = (1, 3)
    object_size: tuple = (0.25, 0.5)
    count: int = 100
    seed: int = 0
    collision_free: bool = True
    grid: int = 4
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes or any(c not in SHAPES for c in self.classes):
            raise ConfigurationError(f"classes must be a non-empty subset of {SHAPES}, got {self.classes}")
        lo, hi = self.objects
        if not 0 <= lo <= hi:
            raise ConfigurationError(f"objects range must satisfy 0 <= min <= max, got {self.objects}")
        smin, smax = self.object_size
        if not 0 < smin <= smax <= 1:
            raise ConfigurationError(f"object size range must lie in (0, 1], got {self.object_size}")
        if self.count < 0 or self.image_size < 1 or self.grid < 1:
            raise ConfigurationError("count must be >= 0, image size and grid >= 1")


def shape_mask(shape, box, size):
    """Boolean ``(size, size)`` mask of pixels whose centers fall inside ``shape`` drawn in ``box``."""
    cx, cy, w, h = box
    centers = (np.arange(size) + 0.5) / size
    px = centers[None, :]
    py = centers[:, None]
    if shape == "circle":
        return ((px - cx) / (w / 2)) ** 2 + ((py - cy) / (h / 2)) ** 2 <= 1.0
    if shape == "square":
        return (np.abs(px - cx) <= w / 2) & (np.abs(py - cy) <= h / 2)
    if shape == "triangle":
        top = cy - h / 2
        depth = py - top
        return (depth >= 0) & (depth <= h) & (np.abs(px - cx) <= (w / 2) * depth / h)
    raise ConfigurationError(f"unknown shape {shape!r}")


def _overlaps(a, b):
    return abs(a.cx - b.cx) < (a.w + b.w) / 2 and abs(a.cy - b.cy) < (a.h + b.h) / 2


def _random_color(rng, avoid):
    while True:
        color = rng.random(3)
        if np.linalg.norm(color - avoid) >= _MIN_CONTRAST:
            return color


def render_example(spec, rng):
    """Draw one image and its annotations from ``rng``."""
    n = spec.image_size
    background = rng.random(3)
    image = np.broadcast_to(background, (n, n, 3)).copy()
    boxes = []
    used_cells = set()
    n_objects = int(rng.integers(spec.objects[0], spec.objects[1] + 1))
    for _ in range(n_objects):
        class_id = int(rng.integers(len(spec.classes)))
        color = _random_color(rng, background)
        for _ in range(_PLACEMENT_TRIES):
            s = float(rng.uniform(*spec.object_size))
            cx = float(rng.uniform(s / 2, 1 - s / 2))
            cy = float(rng.uniform(s / 2, 1 - s / 2))
            box = GroundTruthBox(class_id, cx, cy, s, s)
            cell = grid_cell_of(cx, cy, spec.grid)
            if spec.collision_free and cell in used_cells:
                continue
            if any(_overlaps(box, other) for other in boxes):
                continue
            break
        else:
            continue
        image[shape_mask(spec.classes[class_id], (cx, cy, s, s), n)] = color
        boxes.append(box)
        used_cells.add(cell)
    return image, boxes


def generate_dataset(spec, out_dir):
    """Write ``images/``, ``labels/``, ``manifest.txt`` and ``classes.txt`` under ``out_dir``.

    Image ``i`` is drawn from its own generator seeded with ``(seed, stream, i)``,
    so any image can be regenerated independently of the others.
    """
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(spec.count):
        rng = np.random.default_rng([spec.seed, spec.stream, i])
        image, boxes = render_example(spec, rng)
        name = f"{i:06d}"
        save_image(image, out / "images" / f"{name}.ppm")
        save_annotations(boxes, out / "labels" / f"{name}.txt")
        entries.append((f"images/{name}.ppm", f"labels/{name}.txt"))
    manifest = out / "manifest.txt"
    write_manifest(manifest, entries)
    (out / "classes.txt").write_text("".join(f"{c}\n" for c in spec.classes), encoding="utf-8")
    return manifest
