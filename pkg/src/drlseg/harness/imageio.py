"""Image and field files: 8-bit PGM (P5), PNG, and the LSF1 raw float32 format.

LSF1 layout (little-endian): ``b"LSF1"``, u32 width, u32 height, then
``width * height`` float32 values in row-major order.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ParseError

LSF_MAGIC = b"LSF1"
_LSF_HEAD = struct.Struct("<4sII")
_LSF_HEAD_SIZE = 16  # header is padded to 16 bytes
_PGM_HEAD = re.compile(rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def _to_u8(values) -> np.ndarray:
    a = np.asarray(values)
    if a.dtype == bool:
        return np.where(a, 255, 0).astype(np.uint8)
    a = np.asarray(a, float)
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot quantize non-finite values")
    return np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)


# -- PGM ---------------------------------------------------------------------


def encode_pgm(values) -> bytes:
    q = _to_u8(values)
    if q.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    h, w = q.shape
    return f"P5\n{w} {h}\n255\n".encode() + q.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    m = _PGM_HEAD.match(data)
    if m is None:
        raise ParseError("malformed PGM header", 0)
    w, h, maxval = (int(g) for g in m.groups())
    if not 0 < maxval < 256:
        raise ParseError(f"unsupported PGM maxval {maxval}", m.start(3))
    start = m.end()
    need = w * h
    if len(data) < start + need:
        raise ParseError(f"truncated PGM payload: need {need} bytes", len(data))
    q = np.frombuffer(data, np.uint8, need, start).reshape(h, w)
    return q.astype(float) / float(maxval)


# -- LSF1 --------------------------------------------------------------------


def encode_lsf(field) -> bytes:
    a = np.asarray(field)
    if a.ndim != 2:
        raise ValueError("LSF1 needs a 2-D array")
    h, w = a.shape
    head = _LSF_HEAD.pack(LSF_MAGIC, w, h).ljust(_LSF_HEAD_SIZE, b"\0")
    return head + np.ascontiguousarray(a, "<f4").tobytes()


def decode_lsf(data: bytes) -> np.ndarray:
    if len(data) < _LSF_HEAD_SIZE:
        raise ParseError("truncated LSF1 header", len(data))
    magic, w, h = _LSF_HEAD.unpack_from(data, 0)
    if magic != LSF_MAGIC:
        raise ParseError(f"bad LSF1 magic {magic!r}", 0)
    need = 4 * w * h
    if len(data) < _LSF_HEAD_SIZE + need:
        raise ParseError(f"truncated LSF1 payload: need {need} bytes", len(data))
    if len(data) > _LSF_HEAD_SIZE + need:
        raise ParseError("trailing bytes after LSF1 payload", _LSF_HEAD_SIZE + need)
    return np.frombuffer(data, "<f4", w * h, _LSF_HEAD_SIZE).reshape(h, w).astype(float)


# -- dispatch ----------------------------------------------------------------


def _kind(path) -> str:
    ext = Path(path).suffix.lower()
    if ext in (".pgm",):
        return "pgm"
    if ext == ".png":
        return "png"
    if ext in (".lsf", ".f32", ".raw"):
        return "lsf"
    raise ValueError(f"unsupported file extension {ext!r}")


def save_image(path, values) -> None:
    kind = _kind(path)
    if kind == "png":
        Image.fromarray(_to_u8(values), mode="L").save(path, format="PNG")
        return
    data = encode_pgm(values) if kind == "pgm" else encode_lsf(values)
    Path(path).write_bytes(data)


def load_image(path) -> np.ndarray:
    """Read a PGM/PNG (scaled to [0, 1]) or LSF1 field as float64."""
    kind = _kind(path)
    if kind == "png":
        try:
            with Image.open(path) as im:
                q = np.asarray(im.convert("L"))
        except OSError as err:
            raise ParseError(f"cannot decode PNG: {err}", 0) from err
        return q.astype(float) / 255.0
    data = Path(path).read_bytes()
    return decode_pgm(data) if kind == "pgm" else decode_lsf(data)


def load_mask(path) -> np.ndarray:
    return load_image(path) >= 0.5
