"""Image file ingestion: binary PPM (P6, maxval 255) and 8-bit RGB PNG.

Intensities pass through exactly as stored; there is no color transform
anywhere in the codec.  PPM is the canonical fixture format since it is
trivially bit-exact; PNG is accepted for natural corpora, with alpha
stripped under a warning and anything deeper than 8 bits rejected.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from .errors import UnsupportedImageError

IMAGE_SUFFIXES = (".ppm", ".png")


def _read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P6":
        raise UnsupportedImageError(f"{path}: not a binary PPM (P6) file")
    # Header tokens separated by whitespace; '#' starts a comment to EOL.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise UnsupportedImageError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    width, height, maxval = (int(v) for v in fields)
    if maxval != 255:
        raise UnsupportedImageError(
            f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    n = width * height * 3
    raster = data[pos:pos + n]
    if len(raster) != n:
        raise UnsupportedImageError(f"{path}: truncated PPM raster")
    return np.frombuffer(raster, np.uint8).reshape(height, width, 3).copy()


def _read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise UnsupportedImageError(f"{path}: 16-bit PNG is not supported")
        if im.mode == "RGBA":
            warnings.warn(f"{path}: stripping alpha channel")
            im = im.convert("RGB")
        if im.mode == "P":
            im = im.convert("RGB")
        if im.mode != "RGB":
            raise UnsupportedImageError(
                f"{path}: unsupported PNG colorspace {im.mode!r}")
        return np.asarray(im, np.uint8).copy()


def load_image(path) -> np.ndarray:
    """Exact HxWx3 uint8 intensities from a PPM or PNG file."""
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".ppm":
        return _read_ppm(path)
    if suffix == ".png":
        return _read_png(path)
    with open(path, "rb") as f:
        magic = f.read(8)
    if magic[:2] == b"P6":
        return _read_ppm(path)
    if magic == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    raise UnsupportedImageError(f"{path}: unrecognized image format")


def save_image(path, image: np.ndarray) -> None:
    """Write PPM (default) or PNG depending on the file suffix."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected an HxWx3 uint8 image")
    suffix = os.path.splitext(str(path))[1].lower()
    if suffix == ".png":
        from PIL import Image

        Image.fromarray(image, "RGB").save(path)
        return
    H, W, _ = image.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{W} {H}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def load_corpus(directory) -> list:
    """All PPM/PNG images under a directory, sorted by filename."""
    names = sorted(n for n in os.listdir(directory)
                   if os.path.splitext(n)[1].lower() in IMAGE_SUFFIXES)
    if not names:
        raise UnsupportedImageError(f"no .ppm/.png images in {directory}")
    return [load_image(os.path.join(directory, n)) for n in names]
