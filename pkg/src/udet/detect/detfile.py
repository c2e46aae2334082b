"""Detections text file shared by detect, eval and combine.

One detection per line::

    image_id class_id score x_min y_min x_max y_max

Reals carry 9 significant digits. Lines are ordered by image id, then by
score descending. An optional leading ``# classes=N`` line declares the size
of the class-id space; other ``#`` lines are ignored.
"""

from __future__ import annotations

from pathlib import Path

from udet.detect.boxes import Detection
from udet.errors import ParseError


def fmt(value):
    return f"{value:.9g}"


def sort_detections(dets):
    return sorted(dets, key=lambda d: (d.image_id, -d.score))


def format_detections(dets, num_classes=None):
    """Detection lines, preceded by a ``# classes=N`` header when there is anything to declare."""
    lines = [] if num_classes is None or not dets else [f"# classes={num_classes}"]
    for d in sort_detections(dets):
        if not d.image_id or any(ch.isspace() for ch in d.image_id):
            raise ValueError(f"image id {d.image_id!r} must be non-empty and contain no whitespace")
        lines.append(" ".join([d.image_id, str(d.class_id)] + [fmt(v) for v in (d.score, *d.corners)]))
    return "".join(line + "\n" for line in lines)


def write_detections(path, dets, num_classes=None):
    Path(path).write_text(format_detections(dets, num_classes), encoding="utf-8")


def parse_detections(text, source="<detections>"):
    """Return ``(detections, num_classes)``; ``num_classes`` is None without a header."""
    dets = []
    num_classes = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "classes":
                try:
                    num_classes = int(value)
                except ValueError:
                    raise ParseError(f"{source}:{lineno}: bad classes header {line!r}") from None
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ParseError(f"{source}:{lineno}: expected 7 fields, found {len(parts)}")
        try:
            class_id = int(parts[1])
            score, x0, y0, x1, y1 = (float(v) for v in parts[2:])
        except ValueError:
            raise ParseError(f"{source}:{lineno}: non-numeric field in {line!r}") from None
        if class_id < 0 or x0 > x1 or y0 > y1:
            raise ParseError(f"{source}:{lineno}: invalid class id or inverted box")
        dets.append(Detection(class_id, score, x0, y0, x1, y1, parts[0]))
    return dets, num_classes


def read_detections(path):
    path = Path(path)
    return parse_detections(path.read_text(encoding="utf-8"), str(path))
