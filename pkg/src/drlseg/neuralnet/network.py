"""Layer stacks: shape checking, initialization, forward/backward, SGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import StructuralError, UsageError
from .layers import (
    ForwardTrace,
    LayerSpec,
    conv,
    deconv,
    layer_backward,
    layer_forward,
    logistic_head,
    maxpool,
    relu,
    skip_concat,
)


@dataclass(frozen=True)
class NetworkParams:
    """Per-layer ``(W, b)`` pairs (``None`` for parameter-free layers)."""

    tensors: tuple
    seed: int | None = None

    def __iter__(self):
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    def __getitem__(self, i):
        return self.tensors[i]

    def arrays(self):
        for t in self.tensors:
            if t is not None:
                yield from t

    def count(self) -> int:
        return sum(a.size for a in self.arrays())

    def __add__(self, other: "NetworkParams") -> "NetworkParams":
        return NetworkParams(
            tuple(
                None if a is None else tuple(x + y for x, y in zip(a, b))
                for a, b in zip(self.tensors, other.tensors)
            ),
            self.seed,
        )

    @property
    def dtype(self):
        return next(self.arrays()).dtype if self.count() else np.dtype(float)

    def astype(self, dtype) -> "NetworkParams":
        return NetworkParams(
            tuple(None if t is None else tuple(a.astype(dtype) for a in t) for t in self.tensors), self.seed
        )

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams(
            tuple(None if t is None else tuple(np.zeros_like(a) for a in t) for t in self.tensors), self.seed
        )


def encoder_decoder(widths=(16, 32), head_width=8, kernel=3) -> list[LayerSpec]:
    """Symmetric encoder-decoder with index unpooling and skip concatenation.

    Each encoder level is conv-relu-maxpool; the bottleneck is conv-relu with
    ``widths[-1]`` channels; each decoder level unpools with the indices of
    its mirrored pool, concatenates the pre-pool encoder features and applies
    conv-relu. ``widths=(16, 32), head_width=8`` is the default stack.
    """
    if not widths:
        raise StructuralError("need at least one encoder level")
    layers: list[LayerSpec] = []
    pools, skips = [], []
    for width in widths:
        layers += [conv(width, kernel), relu()]
        skips.append(len(layers) - 1)
        layers.append(maxpool())
        pools.append(len(layers) - 1)
    layers += [conv(widths[-1], kernel), relu()]
    for level in reversed(range(len(widths))):
        out = widths[level - 1] if level > 0 else head_width
        layers += [
            deconv(widths[level], source=pools[level], kernel=kernel),
            skip_concat(source=skips[level]),
            conv(out, kernel),
            relu(),
        ]
    layers.append(logistic_head())
    return layers


def pooling_factor(layers) -> int:
    f = 1
    for spec in layers:
        if spec.kind == "maxpool":
            f *= 2
        elif spec.kind == "conv":
            f *= spec.stride
    return f


def infer_shapes(layers, input_shape) -> list[tuple[int, int, int]]:
    """Output shape of every layer for a ``(C, H, W)`` input; raises on mismatch."""
    shapes: list[tuple[int, int, int]] = []
    c, h, w = input_shape
    for i, spec in enumerate(layers):
        if spec.kind == "conv":
            p = spec.kernel // 2
            if p and min(h, w) <= p:
                raise StructuralError(f"layer {i} conv: spatial {h}x{w} too small for kernel {spec.kernel}")
            c, h, w = spec.out_channels, -(-h // spec.stride), -(-w // spec.stride)
        elif spec.kind == "maxpool":
            if h % 2 or w % 2:
                raise StructuralError(f"layer {i} maxpool: spatial {h}x{w} not divisible by 2")
            h, w = h // 2, w // 2
        elif spec.kind == "deconv":
            src = spec.source
            if src is None or not 0 <= src < i or layers[src].kind != "maxpool":
                raise StructuralError(f"layer {i} deconv: source {src} is not an earlier maxpool")
            if shapes[src] != (c, h, w):
                raise StructuralError(
                    f"layer {i} deconv: expected input {shapes[src]} (pool {src} output), got {(c, h, w)}"
                )
            c, h, w = spec.out_channels, 2 * h, 2 * w
        elif spec.kind == "skip_concat":
            src = spec.source
            if src is None or not 0 <= src < i:
                raise StructuralError(f"layer {i} skip_concat: source {src} is not an earlier layer")
            sc, sh, sw = shapes[src]
            if (sh, sw) != (h, w):
                raise StructuralError(
                    f"layer {i} skip_concat: expected spatial {(sh, sw)} from layer {src}, got {(h, w)}"
                )
            c = c + sc
        elif spec.kind == "logistic_head":
            c = 1
        shapes.append((c, h, w))
    return shapes


def init_params(layers, in_channels: int = 1, seed: int = 0) -> NetworkParams:
    """Glorot-uniform kernels, zero biases."""
    rng = np.random.default_rng(seed)
    c = in_channels
    tensors = []
    side = 4 * pooling_factor(layers)
    shapes = infer_shapes(layers, (in_channels, side, side))
    for i, spec in enumerate(layers):
        if spec.has_params:
            k = spec.kernel
            fan_in, fan_out = c * k * k, spec.out_channels * k * k
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            W = rng.uniform(-bound, bound, size=(spec.out_channels, c, k, k))
            tensors.append((W, np.zeros(spec.out_channels)))
        else:
            tensors.append(None)
        c = shapes[i][0]
    return NetworkParams(tuple(tensors), seed)


def _as_tensor(x, dtype=float):
    x = np.asarray(x, dtype=dtype)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise StructuralError(f"network input must be (H, W) or (C, H, W), got shape {x.shape}")
    return x


def network_forward(layers, params: NetworkParams, x) -> tuple[np.ndarray, ForwardTrace]:
    """Run the stack; returns the single-channel output map in (0, 1) and the trace."""
    x = _as_tensor(x, params.dtype)
    if not layers or layers[-1].kind != "logistic_head":
        raise StructuralError("network must end with a logistic_head layer")
    if len(params) != len(layers):
        raise StructuralError(f"{len(params)} parameter entries for {len(layers)} layers")
    f = pooling_factor(layers)
    if x.shape[1] % f or x.shape[2] % f:
        raise StructuralError(f"input spatial {x.shape[1:]} not divisible by pooling factor {f}")
    trace = ForwardTrace(params=params)
    out = x
    for spec, p in zip(layers, params):
        out = layer_forward(spec, p, out, trace)
    return out[0], trace


def backward_full(layers, params: NetworkParams, trace: ForwardTrace, grad_y):
    """Gradients w.r.t. parameters and network input."""
    if trace.params is not params or len(trace) != len(layers):
        raise UsageError("trace does not come from a forward pass with these layers and params")
    grad_y = np.asarray(grad_y, dtype=params.dtype)
    g = grad_y[None] if grad_y.ndim == 2 else grad_y
    pending: dict[int, np.ndarray] = {}
    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        if i in pending:
            g = g + pending.pop(i)
        res = layer_backward(layers[i], params[i], trace, i, g)
        grads[i] = res.params
        if res.source is not None:
            src = layers[i].source
            pending[src] = pending.get(src, 0) + res.source
        g = res.input
    return NetworkParams(tuple(grads), params.seed), g


def network_backward(layers, params: NetworkParams, trace: ForwardTrace, grad_y) -> NetworkParams:
    return backward_full(layers, params, trace, grad_y)[0]


def sgd_update(params: NetworkParams, grads: NetworkParams, learning_rate: float) -> NetworkParams:
    if not learning_rate >= 0:
        raise ValueError(f"learning rate must be >= 0, got {learning_rate}")
    if len(params) != len(grads):
        raise StructuralError("parameter and gradient layer counts differ")
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p is None:
            out.append(None)
            continue
        if g is None or any(a.shape != b.shape for a, b in zip(p, g)):
            raise StructuralError(f"layer {i}: gradient shapes do not match parameters")
        out.append(tuple((a - learning_rate * b).astype(a.dtype) for a, b in zip(p, g)))
    return NetworkParams(tuple(out), params.seed)
