"""Binary portable pixmap (P6) and graymap (P5) reading and writing."""

from pathlib import Path

import numpy as np


class PixmapError(ValueError):
    pass


def _tokens(data, count, pos):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PixmapError("truncated pixmap header")
        out.append(data[start:pos])
    return out, pos


def decode(data):
    """Decode P6 or P5 bytes into a uint8 array of shape (H, W, 3) or (H, W)."""
    magic = data[:2]
    if magic not in (b"P6", b"P5"):
        raise PixmapError(f"unsupported pixmap magic {magic!r}")
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PixmapError(f"bad pixmap header: {exc}") from None
    if maxval != 255:
        raise PixmapError(f"only 8-bit pixmaps are supported (maxval={maxval})")
    pos += 1  # single whitespace byte before the raster
    channels = 3 if magic == b"P6" else 1
    size = w * h * channels
    raster = data[pos:pos + size]
    if len(raster) != size:
        raise PixmapError(f"raster truncated: expected {size} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape(h, w, 3) if channels == 3 else arr.reshape(h, w)


def encode(image):
    """Encode a uint8 (H, W, 3) array as P6 or an (H, W) array as P5."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise PixmapError("pixmaps are written from uint8 arrays")
    if image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    elif image.ndim == 2:
        magic = b"P5"
    else:
        raise PixmapError(f"cannot encode array of shape {image.shape}")
    h, w = image.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(image).tobytes()


def read(path):
    return decode(Path(path).read_bytes())


def write(path, image):
    Path(path).write_bytes(encode(image))


def to_unit(image):
    """uint8 pixels to float64 in [0, 1]."""
    return np.asarray(image, dtype=np.float64) / 255.0


def to_uint8(image):
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
