"""Binary parameter checkpoints.

Layout (all little-endian)::

    8s   magic  b"DRLSNET\\0"
    u32  format version (1)
    u32  layer count N
    i64  init seed (-1 if unknown)
    N x  layer record  <B I I I I i>: kind code, out_channels, in_channels,
                                       kernel, stride, source (-1 = none)
    payload: for each layer with parameters, in declaration order,
             W (out, in, k, k) then b (out) as float64
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import ParseError
from .layers import KINDS, LayerSpec
from .network import NetworkParams

MAGIC = b"DRLSNET\0"
VERSION = 1
_HEAD = struct.Struct("<8sIIq")
_RECORD = struct.Struct("<BIIIIi")


def dumps(layers, params: NetworkParams) -> bytes:
    if len(layers) != len(params):
        raise ValueError("layers and params differ in length")
    seed = -1 if params.seed is None else int(params.seed)
    chunks = [_HEAD.pack(MAGIC, VERSION, len(layers), seed)]
    payload = []
    for spec, p in zip(layers, params):
        in_ch = 0
        if p is not None:
            W, b = p
            in_ch = W.shape[1]
            payload += [np.asarray(W, "<f8").tobytes(), np.asarray(b, "<f8").tobytes()]
        source = -1 if spec.source is None else spec.source
        chunks.append(
            _RECORD.pack(KINDS.index(spec.kind), spec.out_channels or 0, in_ch, spec.kernel, spec.stride, source)
        )
    return b"".join(chunks + payload)


def loads(data: bytes):
    """Inverse of :func:`dumps`; returns ``(layers, params)``."""
    if len(data) < _HEAD.size:
        raise ParseError("truncated checkpoint header", len(data))
    magic, version, n, seed = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ParseError(f"bad checkpoint magic {magic!r}", 0)
    if version != VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", 8)
    offset = _HEAD.size
    if len(data) < offset + n * _RECORD.size:
        raise ParseError("truncated layer table", len(data))
    layers, shapes = [], []
    for i in range(n):
        kind, out_ch, in_ch, kernel, stride, source = _RECORD.unpack_from(data, offset)
        if kind >= len(KINDS):
            raise ParseError(f"unknown layer kind code {kind}", offset)
        name = KINDS[kind]
        layers.append(
            LayerSpec(
                name,
                out_ch or None,
                kernel,
                stride,
                source=None if source < 0 else source,
            )
        )
        shapes.append((out_ch, in_ch, kernel) if layers[-1].has_params else None)
        offset += _RECORD.size
    tensors = []
    for shape in shapes:
        if shape is None:
            tensors.append(None)
            continue
        out_ch, in_ch, k = shape
        nw = out_ch * in_ch * k * k
        need = 8 * (nw + out_ch)
        if len(data) < offset + need:
            raise ParseError("truncated parameter payload", len(data))
        W = np.frombuffer(data, "<f8", nw, offset).reshape(out_ch, in_ch, k, k).astype(float)
        b = np.frombuffer(data, "<f8", out_ch, offset + 8 * nw).astype(float)
        tensors.append((W, b))
        offset += need
    if offset != len(data):
        raise ParseError("trailing bytes after payload", offset)
    return layers, NetworkParams(tuple(tensors), None if seed < 0 else seed)


def save_checkpoint(path, layers, params: NetworkParams) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(layers, params))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
