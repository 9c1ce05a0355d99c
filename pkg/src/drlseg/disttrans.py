"""Exact Euclidean distance transform and feature-map to level-set conversion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numba
import numpy as np

from .errors import ConfigError
from .fields import as_field, as_mask

Normalization = Literal["max_abs", "clamp_halfwidth"]


@dataclass(frozen=True)
class ConversionOptions:
    binarize_threshold: float = 0.5
    normalization: Normalization = "max_abs"
    degenerate_value: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ConfigError(f"binarize_threshold must lie in (0, 1), got {self.binarize_threshold}")
        if self.normalization not in ("max_abs", "clamp_halfwidth"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if not 0.0 < self.degenerate_value <= 0.5:
            raise ConfigError(f"degenerate_value must lie in (0, 0.5], got {self.degenerate_value}")


@numba.njit(cache=True)
def _lower_envelope(f, out):
    # 1-D squared distance transform of sampled function f (inf = no seed),
    # via the lower envelope of parabolas rooted at the finite samples.
    n = f.shape[0]
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    k = -1
    for q in range(n):
        if f[q] == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    if k < 0:
        for q in range(n):
            out[q] = np.inf
        return
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d = q - v[k]
        out[q] = d * d + f[v[k]]


@numba.njit(cache=True)
def _squared_edt(seeds):
    h, w = seeds.shape
    cols = np.empty((h, w), dtype=np.float64)
    buf_in = np.empty(h, dtype=np.float64)
    buf_out = np.empty(h, dtype=np.float64)
    for j in range(w):
        for i in range(h):
            buf_in[i] = 0.0 if seeds[i, j] else np.inf
        _lower_envelope(buf_in, buf_out)
        cols[:, j] = buf_out
    out = np.empty((h, w), dtype=np.float64)
    row_out = np.empty(w, dtype=np.float64)
    for i in range(h):
        _lower_envelope(cols[i].copy(), row_out)
        out[i] = row_out
    return out


def squared_edt(mask) -> np.ndarray:
    """Squared distance from each pixel to the nearest zero pixel of ``mask``.

    Pixels get ``inf`` when the mask has no zero pixel at all.
    """
    m = as_mask(mask)
    return _squared_edt(np.ascontiguousarray(~m))


def edt(mask) -> np.ndarray:
    """Exact Euclidean distance (in pixels) to the nearest background pixel.

    Background pixels map to 0. A mask with no background at all maps every
    pixel to the grid diagonal ``hypot(width, height)``.
    """
    d2 = squared_edt(mask)
    out = np.sqrt(d2)
    h, w = out.shape
    out[~np.isfinite(out)] = np.hypot(w, h)
    return out


def binarize(y, threshold: float = 0.5) -> np.ndarray:
    return np.asarray(y) >= threshold


def to_levelset(y, opts: ConversionOptions = ConversionOptions()) -> np.ndarray:
    """Convert a (0,1) feature map into a level set in [-0.5, 0.5].

    ``phi = edt(b) - edt(1 - b)`` for the binarized map ``b``, then rescaled;
    phi is positive exactly on ``b``.
    """
    y = as_field(y)
    if y.min() < 0.0 or y.max() > 1.0:
        raise ValueError(f"feature map must lie in [0, 1], got range [{y.min()}, {y.max()}]")
    b = binarize(y, opts.binarize_threshold)
    if b.all():
        return np.full(y.shape, opts.degenerate_value)
    if not b.any():
        return np.full(y.shape, -opts.degenerate_value)
    raw = edt(b) - edt(~b)
    if opts.normalization == "max_abs":
        return 0.5 * raw / np.max(np.abs(raw))
    h, w = y.shape
    return np.clip(raw / (0.5 * np.hypot(w, h)), -0.5, 0.5)
