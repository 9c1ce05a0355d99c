"""Heatmap rendering of level-set fields with the zero contour overdrawn."""

from __future__ import annotations

import numpy as np
from matplotlib import colormaps
from PIL import Image

from ..fields import as_field

CMAP = "RdBu_r"
CONTOUR_RGB = (255, 215, 0)  # gold, away from both ends of the diverging map


def zero_contour(phi) -> np.ndarray:
    """Pixels with ``phi >= 0`` that have a 4-neighbour with ``phi < 0``."""
    inside = as_field(phi) >= 0
    p = np.pad(inside, 1, mode="edge")
    any_out = ~p[:-2, 1:-1] | ~p[2:, 1:-1] | ~p[1:-1, :-2] | ~p[1:-1, 2:]
    return inside & any_out


def render_heatmap(phi) -> np.ndarray:
    """RGB uint8 image; colour scale symmetric about 0."""
    phi = as_field(phi)
    if not np.all(np.isfinite(phi)):
        raise ValueError("heatmap field must be finite")
    span = float(np.max(np.abs(phi)))
    t = np.full(phi.shape, 0.5) if span == 0 else 0.5 + 0.5 * phi / span
    rgb = (colormaps[CMAP](t)[..., :3] * 255.0).round().astype(np.uint8)
    rgb[zero_contour(phi)] = CONTOUR_RGB
    return rgb


def emit_heatmap(phi, path) -> None:
    Image.fromarray(render_heatmap(phi), mode="RGB").save(path, format="PNG")
