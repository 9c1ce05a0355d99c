"""Synthetic phantoms: a rasterized shape with known ground truth, optional
multiplicative bias field and clamped Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from ..errors import ConfigError

SHAPES = ("disk", "ellipse", "blob")
BLOB_JITTER = 0.35


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 64
    height: int = 64
    shape: str = "disk"
    radius: float = 12.0  # disk radius, blob mean radius
    a: float = 14.0  # ellipse semi-axes
    b: float = 8.0
    angle: float = 0.0  # ellipse rotation, radians
    n_points: int = 8  # blob control points
    smoothness: float = 1.0  # blob: circular gaussian width over control points
    center: tuple[float, float] | None = None  # (x, y); grid center if None
    foreground: float = 1.0
    background: float = 0.0
    noise_sigma: float = 0.0
    inhomogeneity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"unknown phantom shape {self.shape!r}")
        if self.width < 1 or self.height < 1:
            raise ConfigError("phantom grid must be at least 1x1")
        for name in ("foreground", "background"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} intensity must lie in [0, 1], got {v}")
        if self.noise_sigma < 0 or self.inhomogeneity < 0:
            raise ConfigError("noise_sigma and inhomogeneity must be >= 0")
        if self.shape == "blob" and self.n_points < 3:
            raise ConfigError("blob needs at least 3 control points")
        if self.smoothness < 0:
            raise ConfigError("smoothness must be >= 0")

    @property
    def center_xy(self) -> tuple[float, float]:
        if self.center is not None:
            return float(self.center[0]), float(self.center[1])
        return float(self.width // 2), float(self.height // 2)

    def half_extent(self) -> tuple[float, float]:
        """Largest |dx|, |dy| the shape can reach from its center."""
        if self.shape == "disk":
            return self.radius, self.radius
        if self.shape == "ellipse":
            c, s = np.cos(self.angle), np.sin(self.angle)
            return float(np.hypot(self.a * c, self.b * s)), float(np.hypot(self.a * s, self.b * c))
        r = self.radius * (1.0 + BLOB_JITTER)
        return r, r


def _check_fits(spec: PhantomSpec):
    cx, cy = spec.center_xy
    ex, ey = spec.half_extent()
    if min(ex, ey) <= 0:
        raise ConfigError("shape size must be positive")
    if cx - ex < 0 or cx + ex > spec.width - 1 or cy - ey < 0 or cy + ey > spec.height - 1:
        raise ConfigError(
            f"{spec.shape} of half-extent ({ex:.1f}, {ey:.1f}) at ({cx}, {cy}) exceeds "
            f"{spec.width}x{spec.height} grid"
        )


def _blob_radius(spec: PhantomSpec, rng) -> CubicSpline:
    n = spec.n_points
    r = spec.radius * (1.0 + rng.uniform(-BLOB_JITTER, BLOB_JITTER, n))
    if spec.smoothness > 0:
        # keep the mean radius, shrink the wiggles
        r = r.mean() + gaussian_filter1d(r - r.mean(), spec.smoothness, mode="wrap")
    theta = np.linspace(0.0, 2 * np.pi, n + 1)
    return CubicSpline(theta, np.append(r, r[0]), bc_type="periodic")


def _bias_field(spec: PhantomSpec, rng, x, y) -> np.ndarray:
    field = np.zeros_like(x)
    for _ in range(3):
        kx, ky = rng.uniform(-1.0, 1.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        field += np.cos(np.pi * (kx * x / spec.width + ky * y / spec.height) + phase)
    peak = np.max(np.abs(field))
    if peak > 0:
        field /= peak
    return 1.0 + spec.inhomogeneity * field


def rasterize(spec: PhantomSpec, rng=None) -> np.ndarray:
    _check_fits(spec)
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width].astype(float)
    cx, cy = spec.center_xy
    dx, dy = xs - cx, ys - cy
    if spec.shape == "disk":
        return dx * dx + dy * dy <= spec.radius * spec.radius
    if spec.shape == "ellipse":
        c, s = np.cos(spec.angle), np.sin(spec.angle)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / spec.a) ** 2 + (v / spec.b) ** 2 <= 1.0
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    radius = _blob_radius(spec, rng)
    theta = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    return np.hypot(dx, dy) <= radius(theta)


def generate_phantom(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(image, ground_truth)``; identical specs give identical output."""
    rng = np.random.default_rng(spec.seed)
    gt = rasterize(spec, rng)
    image = np.where(gt, spec.foreground, spec.background).astype(float)
    if spec.inhomogeneity > 0:
        ys, xs = np.mgrid[0 : spec.height, 0 : spec.width].astype(float)
        image = image * _bias_field(spec, rng, xs, ys)
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, image.shape)
    return np.clip(image, 0.0, 1.0), gt
