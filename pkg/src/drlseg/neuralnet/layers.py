"""Layer vocabulary of the encoder-decoder and their exact gradients.

Tensors are float arrays shaped ``(channels, height, width)``; every layer
keeps the dtype of its input (float64 unless the parameters say otherwise). Convolution
is cross-correlation over a mirror-padded input (odd kernels keep the spatial
size before striding).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from ..errors import StructuralError, UsageError

KINDS = ("conv", "relu", "maxpool", "deconv", "skip_concat", "logistic_head")
LOGIT_CLIP = 30.0


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: int | None = None
    kernel: int = 3
    stride: int = 1
    factor: int = 2
    source: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructuralError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("conv", "deconv"):
            if self.out_channels is None or self.out_channels < 1:
                raise StructuralError(f"{self.kind} needs out_channels >= 1")
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise StructuralError(f"kernel must be odd, got {self.kernel}")
            if self.stride < 1:
                raise StructuralError(f"stride must be >= 1, got {self.stride}")
        if self.kind == "logistic_head" and (self.out_channels != 1 or self.kernel < 1 or self.kernel % 2 == 0):
            raise StructuralError("logistic_head needs out_channels = 1 and an odd kernel")
        if self.kind == "deconv" and self.factor != 2:
            raise StructuralError("index unpooling only supports factor 2")
        if self.kind in ("deconv", "skip_concat") and self.source is None:
            raise StructuralError(f"{self.kind} needs a source layer index")

    @property
    def has_params(self) -> bool:
        return self.kind in ("conv", "deconv", "logistic_head")


def conv(out_channels, kernel=3, stride=1):
    return LayerSpec("conv", out_channels, kernel, stride)


def relu():
    return LayerSpec("relu")


def maxpool():
    return LayerSpec("maxpool")


def deconv(out_channels, source, kernel=3):
    return LayerSpec("deconv", out_channels, kernel, source=source)


def skip_concat(source):
    return LayerSpec("skip_concat", source=source)


def logistic_head():
    return LayerSpec("logistic_head", 1, kernel=1)


@dataclass
class ForwardTrace:
    """Per-layer inputs/outputs and max-pool argmax maps of one forward pass."""

    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    pool_indices: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)
    params: object = None

    def __len__(self):
        return len(self.outputs)


class LayerGradients(NamedTuple):
    input: np.ndarray
    params: tuple | None
    source: np.ndarray | None = None


def _floating(x):
    x = np.asarray(x)
    return x if x.dtype in (np.float32, np.float64) else x.astype(float)


# -- mirror padding ---------------------------------------------------------

def _pad(x, p):
    if p == 0:
        return x
    if min(x.shape[1:]) <= p:
        raise StructuralError(f"spatial size {x.shape[1:]} too small for mirror padding {p}")
    return np.pad(x, ((0, 0), (p, p), (p, p)), mode="reflect")


def _unpad_axis(g, p, axis):
    g = np.moveaxis(g, axis, 0)
    n = g.shape[0] - 2 * p
    out = g[p : p + n].copy()
    out[1 : p + 1] += g[p - 1 :: -1][:p]
    out[n - 1 - p : n - 1] += g[p + n : 2 * p + n][::-1]
    return np.moveaxis(out, 0, axis)


def _unpad(gp, p):
    """Adjoint of :func:`_pad`."""
    if p == 0:
        return gp
    return _unpad_axis(_unpad_axis(gp, p, 1), p, 2)


# -- convolution ------------------------------------------------------------

def _im2col(x, k):
    """Columns ``(C*k*k, H*W)`` of the mirror-padded input, row order (c, a, b)."""
    c, h, w = x.shape
    p = k // 2
    if k == 1:
        return x.reshape(c, h * w)
    xp = _pad(x, p)
    cols = np.empty((c, k, k, h, w), x.dtype)
    for a in range(k):
        for b in range(k):
            cols[:, a, b] = xp[:, a : a + h, b : b + w]
    return cols.reshape(c * k * k, h * w)


def _col2im(gcols, shape, k):
    """Adjoint of :func:`_im2col`."""
    c, h, w = shape
    if k == 1:
        return gcols.reshape(c, h, w)
    p = k // 2
    gcols = gcols.reshape(c, k, k, h, w)
    gp = np.zeros((c, h + 2 * p, w + 2 * p), gcols.dtype)
    for a in range(k):
        for b in range(k):
            gp[:, a : a + h, b : b + w] += gcols[:, a, b]
    return _unpad(gp, p)


def _conv_forward(x, W, b, stride, cols=None):
    o, c, k, _ = W.shape
    if x.shape[0] != c:
        raise StructuralError(f"conv expects {c} input channels, got {x.shape[0]}")
    if cols is None:
        cols = _im2col(x, k)
    _, h, w = x.shape
    out = (W.reshape(o, -1) @ cols).reshape(o, h, w) + b[:, None, None]
    if stride > 1:
        out = np.ascontiguousarray(out[:, ::stride, ::stride])
    return out


def _conv_backward(x, W, g, stride, cols=None):
    o, c, k, _ = W.shape
    _, h, w = x.shape
    if stride > 1:
        full = np.zeros((o, h, w), g.dtype)
        full[:, ::stride, ::stride] = g
        g = full
    if cols is None:
        cols = _im2col(x, k)
    g2 = g.reshape(o, h * w)
    gW = (g2 @ cols.T).reshape(W.shape)
    gb = g2.sum(axis=1)
    gx = _col2im(W.reshape(o, -1).T @ g2, x.shape, k)
    return gx, gW, gb


# -- pooling ------------------------------------------------------------------

def _maxpool_forward(x):
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise StructuralError(f"maxpool needs even spatial dims, got {h}x{w}")
    blocks = x.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h // 2, w // 2, 4)
    idx = blocks.argmax(axis=-1)
    return np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0], idx


def _unpool(x, idx):
    c, h, w = x.shape
    blocks = np.zeros((c, h, w, 4), x.dtype)
    np.put_along_axis(blocks, idx[..., None], x[..., None], axis=-1)
    return blocks.reshape(c, h, w, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, 2 * h, 2 * w)


def _unpool_adjoint(g, idx):
    c, h, w = idx.shape
    blocks = g.reshape(c, h, 2, w, 2).transpose(0, 1, 3, 2, 4).reshape(c, h, w, 4)
    return np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]


# -- dispatch -------------------------------------------------------------------

def layer_forward(spec: LayerSpec, params, x, trace: ForwardTrace) -> np.ndarray:
    """Run one layer on ``x`` and append it to ``trace``; returns the output."""
    x = _floating(x)
    if x.ndim != 3:
        raise StructuralError(f"{spec.kind}: expected (C, H, W) input, got shape {x.shape}")
    index = len(trace.outputs)
    kind = spec.kind
    if kind == "conv":
        W, b = params
        cols = trace.cache[index] = _im2col(x, W.shape[-1])
        out = _conv_forward(x, W, b, spec.stride, cols)
    elif kind == "relu":
        out = np.maximum(x, 0.0)
    elif kind == "maxpool":
        out, idx = _maxpool_forward(x)
        trace.pool_indices[index] = idx
    elif kind == "deconv":
        idx = _source_indices(spec, trace, index)
        if idx.shape != x.shape:
            raise StructuralError(
                f"layer {index} deconv: input {x.shape} does not match pooled map {idx.shape} of layer {spec.source}"
            )
        W, b = params
        up = _unpool(x, idx)
        cols = trace.cache[index] = _im2col(up, W.shape[-1])
        out = _conv_forward(up, W, b, 1, cols)
    elif kind == "skip_concat":
        other = _source_output(spec, trace, index)
        if other.shape[1:] != x.shape[1:]:
            raise StructuralError(
                f"layer {index} skip_concat: input spatial {x.shape[1:]} vs source {other.shape[1:]}"
            )
        out = np.concatenate([x, other], axis=0)
    else:  # logistic_head
        W, b = params
        z = _conv_forward(x, W, b, 1)
        trace.cache[index] = z
        out = expit(np.clip(z, -LOGIT_CLIP, LOGIT_CLIP))
    trace.inputs.append(x)
    trace.outputs.append(out)
    return out


def _source_output(spec, trace, index):
    if not 0 <= spec.source < index:
        raise StructuralError(f"layer {index}: skip source {spec.source} is not an earlier layer")
    return trace.outputs[spec.source]


def _source_indices(spec, trace, index):
    if spec.source not in trace.pool_indices or spec.source >= index:
        raise StructuralError(f"layer {index}: deconv source {spec.source} is not an earlier maxpool")
    return trace.pool_indices[spec.source]


def layer_backward(spec: LayerSpec, params, trace: ForwardTrace, index: int, grad_output) -> LayerGradients:
    """Exact gradient of layer ``index`` given d(loss)/d(output)."""
    if not 0 <= index < len(trace.outputs):
        raise UsageError(f"no forward record for layer {index}; run the forward pass first")
    x = trace.inputs[index]
    y = trace.outputs[index]
    g = np.asarray(grad_output, dtype=y.dtype)
    if g.shape != y.shape:
        raise UsageError(f"layer {index}: gradient shape {g.shape} does not match output {y.shape}")
    kind = spec.kind
    if kind == "conv":
        W, _ = params
        gx, gW, gb = _conv_backward(x, W, g, spec.stride, trace.cache.get(index))
        return LayerGradients(gx, (gW, gb))
    if kind == "relu":
        return LayerGradients(g * (x > 0), None)
    if kind == "maxpool":
        return LayerGradients(_unpool(g, trace.pool_indices[index]), None)
    if kind == "deconv":
        W, _ = params
        idx = trace.pool_indices[spec.source]
        gu, gW, gb = _conv_backward(_unpool(x, idx), W, g, 1, trace.cache.get(index))
        return LayerGradients(_unpool_adjoint(gu, idx), (gW, gb))
    if kind == "skip_concat":
        c = x.shape[0]
        return LayerGradients(g[:c], None, g[c:])
    W, b = params
    z = trace.cache[index] if index in trace.cache else _conv_forward(x, W, b, 1)
    gz = g * y * (1.0 - y) * (np.abs(z) < LOGIT_CLIP)
    gx, gW, gb = _conv_backward(x, W, gz, 1)
    return LayerGradients(gx, (gW, gb))
