"""Binary PPM (P6, maxval 255) reader and writer.

In memory an image is a ``(height, width, 3)`` float64 array in [0, 1].
On disk each channel is one byte; values are rounded to the nearest 1/255.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from udet.errors import ParseError, UnsupportedFormatError

_WS = b" \t\n\r\x0b\x0c"


def to_bytes(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {image.shape}")
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)


def encode_ppm(image):
    pixels = to_bytes(image)
    h, w, _ = pixels.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def save_image(image, path):
    Path(path).write_bytes(encode_ppm(image))


def _header_token(data, pos):
    """Next whitespace-delimited header token, skipping ``#`` comments. Returns (token, start, end)."""
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WS and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ParseError(f"byte {start}: truncated PPM header")
    return data[start:pos], start, pos


def decode_ppm(data, source="<ppm>"):
    if data[:2] != b"P6":
        raise ParseError(f"{source}: byte 0: not a binary PPM (magic {data[:2]!r})")
    pos = 2
    if pos >= len(data) or data[pos : pos + 1] not in _WS:
        raise ParseError(f"{source}: byte {pos}: expected whitespace after magic")
    values = []
    for name in ("width", "height", "maxval"):
        try:
            tok, start, pos = _header_token(data, pos)
        except ParseError as exc:
            raise ParseError(f"{source}: {exc}") from None
        if not tok.isdigit() or int(tok) < 1:
            raise ParseError(f"{source}: byte {start}: invalid {name} {tok!r}")
        values.append(int(tok))
    width, height, maxval = values
    if maxval != 255:
        raise UnsupportedFormatError(f"{source}: byte {start}: maxval {maxval} not supported (only 255)")
    if pos >= len(data) or data[pos : pos + 1] not in _WS:
        raise ParseError(f"{source}: byte {pos}: expected single whitespace before pixel data")
    pos += 1
    need = width * height * 3
    if len(data) - pos < need:
        raise ParseError(f"{source}: byte {len(data)}: truncated payload, expected {need} bytes from byte {pos}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(height, width, 3)
    return pixels.astype(np.float64) / 255.0


def load_image(path):
    path = Path(path)
    return decode_ppm(path.read_bytes(), str(path))
