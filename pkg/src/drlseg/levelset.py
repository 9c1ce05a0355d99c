"""Variational level-set core.

Level-set convention: ``phi > 0`` inside the contour, ``phi < 0`` outside.

The five-term energy integrates, per pixel,

    mu*H + nu*delta*|grad phi| + alpha*(H - GT)^2
        + lambda1*(v - c1)^2*H + lambda2*(v - c2)^2*(1 - H)

where ``H``/``delta`` are the arctan-regularized Heaviside and Dirac functions
and ``v`` is the data field. Two data-field modes exist:

``"as_written"``
    ``v = H(phi)``; the data terms measure uniformity of the soft indicator
    itself, and their phi-derivative picks up chain-rule terms.
``"feature_map"``
    ``v = u``, an external field independent of phi (classic two-phase
    piecewise-constant model).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .errors import ConfigError, DegenerateRegionError
from .fields import Grid2D, as_field, as_mask, divergence, gradient, gradient_adjoint, integrate

DataFieldMode = Literal["as_written", "feature_map"]
DATA_FIELD_MODES = ("as_written", "feature_map")

GRAD_FLOOR = 1e-8
DEGENERATE_MEASURE = 1e-12


@dataclass(frozen=True)
class EnergyWeights:
    mu: float = 0.0
    nu: float = -0.5
    alpha: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("mu", "alpha", "lambda1", "lambda2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        for name, value in vars(self).items():
            if not np.isfinite(value):
                raise ConfigError(f"{name} must be finite")


class RegionConstants(NamedTuple):
    c1: float
    c2: float


@dataclass(frozen=True)
class EvolutionConfig:
    eta: float = 0.1
    inner_iters: int = 10
    nsteps: int = 3
    include_supervision_in_evolution: bool = False
    data_field_mode: DataFieldMode = "as_written"

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if self.inner_iters < 1:
            raise ConfigError(f"inner_iters must be >= 1, got {self.inner_iters}")
        if self.nsteps < 0:
            raise ConfigError(f"nsteps must be >= 0, got {self.nsteps}")
        if self.data_field_mode not in DATA_FIELD_MODES:
            raise ConfigError(f"unknown data_field_mode {self.data_field_mode!r}")


def _check_epsilon(epsilon):
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")


def heaviside(tau, epsilon: float = 1.0):
    _check_epsilon(epsilon)
    return 0.5 * (1.0 + (2.0 / np.pi) * np.arctan(np.divide(tau, epsilon)))


def dirac(tau, epsilon: float = 1.0):
    _check_epsilon(epsilon)
    return epsilon / (np.pi * (epsilon * epsilon + np.square(tau)))


def dirac_derivative(tau, epsilon: float = 1.0):
    _check_epsilon(epsilon)
    tau = np.asarray(tau, dtype=float)
    return -2.0 * epsilon * tau / (np.pi * (epsilon * epsilon + tau * tau) ** 2)


def contour_length(phi, epsilon: float = 1.0, spacing: float = 1.0) -> float:
    phi = as_field(phi)
    return integrate(dirac(phi, epsilon) * gradient(phi, spacing).norm(), spacing)


def contour_area(phi, epsilon: float = 1.0, spacing: float = 1.0) -> float:
    return integrate(heaviside(as_field(phi), epsilon), spacing)


def _data_field(u, H, mode):
    if mode == "as_written":
        return H
    if mode == "feature_map":
        if u is None:
            raise ConfigError("feature_map mode needs a data field u")
        u = as_field(u)
        if u.shape != H.shape:
            raise ValueError(f"data field shape {u.shape} does not match phi {H.shape}")
        return u
    raise ConfigError(f"unknown data_field_mode {mode!r}")


def _supervision(gt, shape, alpha):
    if alpha == 0:
        return None
    if gt is None:
        raise ConfigError("alpha > 0 requires a ground-truth mask")
    gt = as_mask(gt)
    if gt.shape != shape:
        raise ValueError(f"ground truth shape {gt.shape} does not match phi {shape}")
    return gt.astype(float)


def region_constants(u, phi, epsilon: float = 1.0, mode: DataFieldMode = "feature_map", spacing: float = 1.0) -> RegionConstants:
    """Closed-form minimizers of the data terms for fixed phi.

    ``c1`` is the H-weighted mean of the data field, ``c2`` the (1-H)-weighted
    mean. Raises :class:`DegenerateRegionError` if either weight integrates to
    (almost) zero.
    """
    phi = as_field(phi)
    H = heaviside(phi, epsilon)
    v = _data_field(u, H, mode)
    inside = integrate(H, spacing)
    outside = integrate(1.0 - H, spacing)
    if inside <= DEGENERATE_MEASURE:
        raise DegenerateRegionError("inside", inside)
    if outside <= DEGENERATE_MEASURE:
        raise DegenerateRegionError("outside", outside)
    c1 = integrate(v * H, spacing) / inside
    c2 = integrate(v * (1.0 - H), spacing) / outside
    return RegionConstants(float(c1), float(c2))


def energy(u, phi, gt, c: RegionConstants, w: EnergyWeights, mode: DataFieldMode = "feature_map", spacing: float = 1.0) -> float:
    phi = as_field(phi)
    eps = w.epsilon
    H = heaviside(phi, eps)
    v = _data_field(u, H, mode)
    gt = _supervision(gt, phi.shape, w.alpha)
    c1, c2 = c
    density = w.mu * H
    if w.nu != 0:
        density = density + w.nu * dirac(phi, eps) * gradient(phi, spacing).norm()
    if gt is not None:
        density = density + w.alpha * (H - gt) ** 2
    density = density + w.lambda1 * (v - c1) ** 2 * H + w.lambda2 * (v - c2) ** 2 * (1.0 - H)
    return integrate(density, spacing)


def _data_bracket(v, H, c, w, mode):
    """Pointwise derivative of the two data terms w.r.t. H (as_written) or
    w.r.t. phi through H only (feature_map), before the delta factor."""
    c1, c2 = c
    if mode == "as_written":
        return (
            w.lambda1 * ((H - c1) ** 2 + 2.0 * (H - c1) * H)
            - w.lambda2 * (H - c2) ** 2
            + 2.0 * w.lambda2 * (H - c2) * (1.0 - H)
        )
    return w.lambda1 * (v - c1) ** 2 - w.lambda2 * (v - c2) ** 2


def energy_gradient_phi(u, phi, gt, c: RegionConstants, w: EnergyWeights, mode: DataFieldMode = "feature_map", spacing: float = 1.0) -> np.ndarray:
    """Derivative of :func:`energy` w.r.t. phi per unit area, c held fixed.

    The length term is differentiated through the discrete gradient operator
    (``delta'(phi)|grad phi| + G^T(delta * grad phi/|grad phi|)``), which is
    the grid-consistent form of ``-delta * div(grad phi/|grad phi|)``; the
    result is therefore the exact gradient of the discrete energy divided by
    ``spacing**2``.
    """
    phi = as_field(phi)
    eps = w.epsilon
    H = heaviside(phi, eps)
    d = dirac(phi, eps)
    v = _data_field(u, H, mode)
    gt = _supervision(gt, phi.shape, w.alpha)
    bracket = w.mu + _data_bracket(v, H, c, w, mode)
    if gt is not None:
        bracket = bracket + 2.0 * w.alpha * (H - gt)
    out = d * bracket
    if w.nu != 0:
        g = gradient(phi, spacing)
        norm = g.norm()
        safe = np.maximum(norm, GRAD_FLOOR)
        flux = type(g)(d * g.dx / safe, d * g.dy / safe)
        length = dirac_derivative(phi, eps) * norm + gradient_adjoint(flux, spacing)
        out = out + w.nu * length
    return out


def energy_gradient_c(u, phi, c: RegionConstants, w: EnergyWeights, mode: DataFieldMode = "feature_map", spacing: float = 1.0) -> tuple[float, float]:
    phi = as_field(phi)
    H = heaviside(phi, w.epsilon)
    v = _data_field(u, H, mode)
    c1, c2 = c
    g1 = -2.0 * w.lambda1 * integrate((v - c1) * H, spacing)
    g2 = -2.0 * w.lambda2 * integrate((v - c2) * (1.0 - H), spacing)
    return g1, g2


def curvature(phi, spacing: float = 1.0) -> np.ndarray:
    """Mean curvature ``div(grad phi / |grad phi|)`` of the level lines."""
    g = gradient(as_field(phi), spacing)
    safe = np.maximum(g.norm(), GRAD_FLOOR)
    return divergence(type(g)(g.dx / safe, g.dy / safe), spacing)


def evolution_force(phi, u, gt, c: RegionConstants, w: EnergyWeights, cfg: EvolutionConfig, spacing: float = 1.0) -> np.ndarray:
    """Descent direction ``d phi / dt`` of one explicit evolution step."""
    phi = as_field(phi)
    mode = cfg.data_field_mode
    H = heaviside(phi, w.epsilon)
    v = _data_field(u, H, mode)
    force = -w.mu - _data_bracket(v, H, c, w, mode)
    if w.nu != 0:
        force = force + w.nu * curvature(phi, spacing)
    if cfg.include_supervision_in_evolution:
        gt = _supervision(gt, phi.shape, w.alpha)
        if gt is not None:
            force = force - 2.0 * w.alpha * (H - gt)
    return dirac(phi, w.epsilon) * force


def evolution_step(phi, u, gt, c: RegionConstants | None, w: EnergyWeights, cfg: EvolutionConfig, spacing: float = 1.0) -> np.ndarray:
    """One explicit step ``phi + eta * dphi/dt``.

    ``c=None`` recomputes the region constants from ``phi`` first.
    """
    phi = as_field(phi)
    if c is None:
        c = region_constants(u, phi, w.epsilon, cfg.data_field_mode, spacing)
    out = phi + cfg.eta * evolution_force(phi, u, gt, c, w, cfg, spacing)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("evolution step produced non-finite values")
    return out


def chan_vese_segment(image, phi0, w: EnergyWeights, cfg: EvolutionConfig, max_iters: int = 500, tol: float = 1e-3, spacing: float = 1.0):
    """Two-phase piecewise-constant segmentation of ``image`` by gradient descent.

    Alternates closed-form region constants with one evolution step until the
    sup-norm update drops below ``tol`` or ``max_iters`` steps were taken.
    The data field is always the image (``feature_map`` mode); ``alpha`` is
    ignored since there is no ground truth.

    Returns ``(mask, phi, iterations)``.
    """
    image = as_field(image)
    phi = as_field(phi0).copy()
    if image.shape != phi.shape:
        raise ValueError(f"image {image.shape} and phi0 {phi.shape} differ in shape")
    cfg = EvolutionConfig(cfg.eta, cfg.inner_iters, cfg.nsteps, False, "feature_map")
    iterations = 0
    while iterations < max_iters:
        c = region_constants(image, phi, w.epsilon, "feature_map", spacing)
        new = phi + cfg.eta * evolution_force(phi, image, None, c, w, cfg, spacing)
        iterations += 1
        change = float(np.max(np.abs(new - phi)))
        phi = new
        if change < tol:
            break
    return phi >= 0, phi, iterations


def initialize_phi(grid: Grid2D, kind: str = "centered_circle", *, radius: float | None = None, period: float | None = None) -> np.ndarray:
    """Initial level set on ``grid``.

    ``centered_circle`` is the signed distance to a circle around pixel
    ``(width//2, height//2)``, positive inside; ``checkerboard`` is
    ``sin(pi x/p) sin(pi y/p)``.
    """
    x, y = grid.coordinates()
    extent = min(grid.width, grid.height) * grid.spacing
    if kind == "centered_circle":
        if radius is None or not 0 < radius < extent:
            raise ValueError(f"radius must be in (0, {extent}), got {radius}")
        cx = (grid.width // 2) * grid.spacing
        cy = (grid.height // 2) * grid.spacing
        return radius - np.hypot(x - cx, y - cy)
    if kind == "checkerboard":
        if period is None or not 0 < period < extent:
            raise ValueError(f"period must be in (0, {extent}), got {period}")
        return np.sin(np.pi * x / period) * np.sin(np.pi * y / period)
    raise ValueError(f"unknown initialization kind {kind!r}")
