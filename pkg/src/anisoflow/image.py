"""Image helpers shared by every other module.

Images are plain 2D float64 numpy arrays indexed ``[row, column]``; masks are
boolean arrays of the same shape. Column index is the x1 coordinate, row
index the x2 coordinate, origin top-left.

File formats:

* PGM (binary P5), maxval 255 or 65535 (big-endian), mapped linearly to [0, 1].
* float-raw: 16-byte header (``b"AGF2"``, width and height as little-endian
  uint32, 4 reserved zero bytes) followed by little-endian float64 samples in
  row-major order.
"""
from __future__ import annotations

import csv
import math
import os
import struct

import numpy as np
from scipy import ndimage

RAW_MAGIC = b"AGF2"
_MAX_DIM = 1 << 20


class ImageFormatError(ValueError):
    """Malformed or unsupported image file."""


def unit_impulse(N: int) -> np.ndarray:
    """``N x N`` zeros with a single one at ``(N//2, N//2)``."""
    if N < 3:
        raise ValueError(f"impulse image needs N >= 3, got {N}")
    img = np.zeros((N, N))
    img[N // 2, N // 2] = 1.0
    return img


def sample_true_kernel(N: int, spec) -> np.ndarray:
    """Continuous rotated Gaussian density sampled at integer offsets from the
    centre pixel ``(N//2, N//2)``. Not renormalised."""
    s1, s2 = spec.sigma1, spec.sigma2
    if not (s2 > 0 and s1 > s2):
        raise ValueError(f"need sigma1 > sigma2 > 0, got ({s1}, {s2})")
    t = math.radians(spec.theta)
    d = np.arange(N, dtype=np.float64) - N // 2
    x1 = d[None, :]
    x2 = d[:, None]
    along = x1 * math.cos(t) + x2 * math.sin(t)
    across = -x1 * math.sin(t) + x2 * math.cos(t)
    return np.exp(-0.5 * (along / s1) ** 2 - 0.5 * (across / s2) ** 2) / (2.0 * math.pi * s1 * s2)


def l2_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def median3x3(img) -> np.ndarray:
    """3x3 median with edge replication."""
    return ndimage.median_filter(np.asarray(img, dtype=np.float64), size=3, mode="nearest")


# --------------------------------------------------------------------------
# I/O

def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFormatError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        w, pos = _read_token(buf, pos)
        h, pos = _read_token(buf, pos)
        mx, pos = _read_token(buf, pos)
        w, h, mx = int(w), int(h), int(mx)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad PGM header") from exc
    if not (0 < w <= _MAX_DIM and 0 < h <= _MAX_DIM):
        raise ImageFormatError(f"{path}: bad dimensions {w}x{h}")
    if mx not in (255, 65535):
        raise ImageFormatError(f"{path}: unsupported maxval {mx}")
    pos += 1  # single whitespace after maxval
    dtype = np.dtype(">u2") if mx == 65535 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(buf) - pos < need:
        raise ImageFormatError(f"{path}: truncated pixel data")
    data = np.frombuffer(buf, dtype=dtype, count=w * h, offset=pos)
    return data.reshape(h, w).astype(np.float64) / mx


def write_pgm(img, path, maxval: int = 255) -> None:
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    arr = np.asarray(img, dtype=np.float64)
    q = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    data = q.astype(">u2" if maxval == 65535 else "u1")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != RAW_MAGIC:
            raise ImageFormatError(f"{path}: not an AGF2 float-raw file")
        w, h, _ = struct.unpack("<III", head[4:])
        if not (0 < w <= _MAX_DIM and 0 < h <= _MAX_DIM):
            raise ImageFormatError(f"{path}: bad dimensions {w}x{h}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != w * h:
        raise ImageFormatError(f"{path}: expected {w * h} samples, found {data.size}")
    return data.reshape(h, w).astype(np.float64)


def write_raw(img, path) -> None:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2D image")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(RAW_MAGIC + struct.pack("<III", w, h, 0))
        fh.write(arr.astype("<f8").tobytes())


def _is_pgm(path) -> bool:
    return os.fspath(path).lower().endswith((".pgm", ".pnm"))


def read_image(path) -> np.ndarray:
    """Read a PGM (by extension) or float-raw image."""
    if _is_pgm(path):
        return read_pgm(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic[:2] == b"P5":
        return read_pgm(path)
    return read_raw(path)


def write_image(img, path) -> None:
    """Write PGM for ``.pgm``/``.pnm`` paths (8-bit), float-raw otherwise."""
    if _is_pgm(path):
        write_pgm(img, path)
    else:
        write_raw(img, path)


def write_ppm(rgb, path) -> None:
    """Binary P6 writer for float RGB images in [0, 1]."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    h, w, _ = arr.shape
    data = np.rint(np.clip(arr, 0.0, 1.0) * 255).astype("u1")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)
