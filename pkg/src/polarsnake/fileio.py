"""Image, mask, and contour file handling.

Supported raster formats: binary PGM (P5, 8-bit) and 8-bit grayscale PNG.
Masks round-trip losslessly (0 = outside, 255 = inside); contours are stored
as JSON and reproduce their coefficient vector bit for bit.
"""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .bspline import BSplineContour, contour_from_dict, contour_to_dict
from .errors import InputError, UnsupportedFormatError
from .geometry import PolarFrame


def _parse_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise UnsupportedFormatError("not a binary (P5) PGM file")
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise UnsupportedFormatError("truncated PGM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(int(data[pos:end]))
            pos = end
    width, height, maxval = tokens
    if maxval > 255:
        raise UnsupportedFormatError(f"PGM maxval {maxval} unsupported (8-bit only)")
    pos += 1  # single whitespace after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise UnsupportedFormatError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _encode_pgm(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.astype(np.uint8).tobytes()


def _decode_png(data: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"not a readable PNG: {exc}") from exc
    except OSError as exc:
        raise UnsupportedFormatError(f"truncated or corrupt PNG: {exc}") from exc
    if img.mode != "L":
        raise UnsupportedFormatError(
            f"PNG mode {img.mode!r} unsupported; need 8-bit grayscale (mode 'L')")
    return np.asarray(img, dtype=np.uint8)


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_pixels(data: bytes) -> np.ndarray:
    """8-bit pixel array from PGM or PNG bytes (sniffed by magic number)."""
    if data.startswith(b"P5"):
        return _parse_pgm(data)
    if data.startswith(b"\x89PNG"):
        return _decode_png(data)
    raise UnsupportedFormatError("unrecognized image data (need P5 PGM or PNG)")


def _encode_for(path: Path, pixels: np.ndarray) -> bytes:
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return _encode_pgm(pixels)
    if suffix == ".png":
        return encode_png(pixels)
    raise UnsupportedFormatError(f"unsupported output format {suffix!r} (use .pgm or .png)")


def load_image(path: str | Path) -> np.ndarray:
    """Intensity grid in [0, 1] (float64) from an 8-bit PGM or PNG file."""
    data = Path(path).read_bytes()
    return decode_pixels(data).astype(np.float64) / 255.0


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Quantize a [0, 1] intensity grid to 8 bits and write PGM or PNG."""
    arr = np.asarray(image, dtype=np.float64)
    pixels = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Path(path).write_bytes(_encode_for(Path(path), pixels))


def mask_to_pixels(mask: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(mask).astype(bool), 255, 0).astype(np.uint8)


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(_encode_for(Path(path), mask_to_pixels(mask)))


def load_mask(path: str | Path) -> np.ndarray:
    return decode_pixels(Path(path).read_bytes()) >= 128


def save_contour(contour: BSplineContour, frame: PolarFrame, path: str | Path) -> None:
    doc = contour_to_dict(contour, frame.origin)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_contour(path: str | Path) -> tuple[BSplineContour, PolarFrame]:
    """Load a contour document.  The frame's initial radius is reconstructed as
    the mean coefficient (the mean contour radius, by partition of unity)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid contour JSON: {exc}") from exc
    contour, origin = contour_from_dict(doc)
    radius = float(np.mean(contour.coefficients))
    return contour, PolarFrame(origin=origin, initial_radius=max(radius, 1e-6))
