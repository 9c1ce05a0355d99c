"""Grid containers and discrete differential operators.

Fields are plain 2D numpy arrays indexed ``f[row, col]``; the x coordinate runs
along columns (axis 1) and y along rows (axis 0), so ``f[j, i] = f(x=i, y=j)``.
Every operator takes the pixel ``spacing`` as a keyword (default 1.0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    width: int
    height: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.width}x{self.height}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @classmethod
    def of(cls, field: np.ndarray, spacing: float = 1.0) -> "Grid2D":
        h, w = np.shape(field)
        return cls(int(w), int(h), spacing)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates ``(x, y)`` as 2D arrays, in length units."""
        ys, xs = np.mgrid[0 : self.height, 0 : self.width].astype(float)
        return xs * self.spacing, ys * self.spacing


class VectorField2D(NamedTuple):
    dx: np.ndarray
    dy: np.ndarray

    def norm(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)


def as_field(f) -> np.ndarray:
    a = np.asarray(f, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains non-finite values")
    return a


def as_mask(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D mask, got shape {a.shape}")
    if a.dtype != bool:
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("mask values must be 0 or 1")
        a = a.astype(bool)
    return a


def _diff(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    if f.shape[axis] < 2:
        return np.zeros_like(f, dtype=float)
    return np.gradient(f, h, axis=axis, edge_order=1)


def _diff_adjoint(g: np.ndarray, axis: int, h: float) -> np.ndarray:
    # Transpose of _diff: central stencil inside, first-order one-sided rows at the ends.
    n = g.shape[axis]
    if n < 2:
        return np.zeros_like(g, dtype=float)
    g = np.moveaxis(g, axis, 0)
    out = np.zeros_like(g, dtype=float)
    out[0] -= g[0] / h
    out[1] += g[0] / h
    out[n - 1] += g[n - 1] / h
    out[n - 2] -= g[n - 1] / h
    inner = g[1 : n - 1] / (2 * h)
    out[2:n] += inner
    out[0 : n - 2] -= inner
    return np.moveaxis(out, 0, axis)


def gradient(f, spacing: float = 1.0) -> VectorField2D:
    """Central differences inside, one-sided differences on the border."""
    f = np.asarray(f, dtype=float)
    return VectorField2D(_diff(f, 1, spacing), _diff(f, 0, spacing))


def gradient_adjoint(v: VectorField2D, spacing: float = 1.0) -> np.ndarray:
    """Apply the transpose of :func:`gradient` to a vector field.

    ``sum(v . gradient(f)) == sum(f * gradient_adjoint(v))`` for every ``f``.
    """
    return _diff_adjoint(np.asarray(v.dx, float), 1, spacing) + _diff_adjoint(
        np.asarray(v.dy, float), 0, spacing
    )


def _central_reflect(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    if a.shape[axis] < 2:
        return np.zeros_like(a, dtype=float)
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    p = np.pad(a, pad, mode="reflect")
    n = a.shape[axis]
    hi = np.take(p, np.arange(2, n + 2), axis=axis)
    lo = np.take(p, np.arange(0, n), axis=axis)
    return (hi - lo) / (2 * h)


def divergence(v: VectorField2D, spacing: float = 1.0) -> np.ndarray:
    """Central-difference divergence with mirrored borders."""
    return _central_reflect(np.asarray(v.dx, float), 1, spacing) + _central_reflect(
        np.asarray(v.dy, float), 0, spacing
    )


def integrate(f, spacing: float = 1.0) -> float:
    return float(np.sum(f) * spacing * spacing)
