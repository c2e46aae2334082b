"""Annotation text files and dataset manifests.

Annotation file: one object per line, ``class_id cx cy w h`` with all reals
as fractions of the image size, 9 significant digits.

Manifest: one ``image_path annotation_path`` pair per line, paths relative
to the manifest's directory.
"""

from __future__ import annotations

from pathlib import Path

from udet.detect.boxes import GroundTruthBox
from udet.errors import ConfigurationError, ParseError


def format_annotations(boxes):
    return "".join(f"{b.class_id} {b.cx:.9g} {b.cy:.9g} {b.w:.9g} {b.h:.9g}\n" for b in boxes)


def save_annotations(boxes, path):
    Path(path).write_text(format_annotations(boxes), encoding="utf-8")


def parse_annotations(text, source="<annotations>"):
    boxes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(f"{source}:{lineno}: expected 5 fields (class_id cx cy w h), found {len(parts)}")
        try:
            class_id = int(parts[0])
            cx, cy, w, h = (float(v) for v in parts[1:])
            boxes.append(GroundTruthBox(class_id, cx, cy, w, h))
        except (ValueError, ConfigurationError) as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
    return boxes


def load_annotations(path):
    path = Path(path)
    return parse_annotations(path.read_text(encoding="utf-8"), str(path))


def image_id_for(image_path):
    return Path(image_path).stem


def read_manifest(path):
    """Return ``[(image_path, annotation_path), ...]`` resolved against the manifest's directory."""
    path = Path(path)
    base = path.parent
    entries = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'image_path annotation_path'")
        entries.append((base / parts[0], base / parts[1]))
    return entries


def write_manifest(path, entries):
    """``entries`` are paths relative to the manifest directory."""
    Path(path).write_text("".join(f"{img} {ann}\n" for img, ann in entries), encoding="utf-8")


def load_ground_truth(manifest):
    """Map image id to its annotated boxes for every manifest entry."""
    gts = {}
    for img, ann in read_manifest(manifest):
        image_id = image_id_for(img)
        if image_id in gts:
            raise ParseError(f"{manifest}: duplicate image id {image_id!r}")
        gts[image_id] = load_annotations(ann)
    return gts
