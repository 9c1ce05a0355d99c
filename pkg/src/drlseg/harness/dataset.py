"""Phantom datasets: per-case spec sampling, writing to disk, loading back."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .config import SynthConfig
from .imageio import load_image, load_mask, save_image
from .manifest import ManifestEntry, read_manifest, split_counts, write_manifest
from .phantom import PhantomSpec, generate_phantom


def case_specs(cfg: SynthConfig, count: int) -> list[PhantomSpec]:
    """Deterministic per-case phantom specs derived from the config seed."""
    if count < 1:
        raise ConfigError("count must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    base = cfg.phantom
    specs = []
    for _ in range(count):
        spec = replace(base, seed=int(rng.integers(2**31 - 1)))
        if cfg.jitter.radius is not None:
            lo, hi = cfg.jitter.radius
            spec = replace(spec, radius=float(rng.uniform(lo, hi)))
        if cfg.jitter.center:
            ex, ey = spec.half_extent()
            if 2 * ex > spec.width - 1 or 2 * ey > spec.height - 1:
                raise ConfigError("jittered shape does not fit the grid")
            cx = float(rng.uniform(ex, spec.width - 1 - ex))
            cy = float(rng.uniform(ey, spec.height - 1 - ey))
            spec = replace(spec, center=(cx, cy))
        specs.append(spec)
    return specs


def synthesize(cfg: SynthConfig, out_dir, count: int, image_ext: str = ".pgm") -> Path:
    """Write ``count`` phantoms plus ``manifest.jsonl`` into ``out_dir``."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    n_train, _ = split_counts(count, cfg.train_fraction)
    width = len(str(count - 1))
    entries = []
    for i, spec in enumerate(case_specs(cfg, count)):
        image, gt = generate_phantom(spec)
        cid = f"case{i:0{width}d}"
        img_path = out / "images" / f"{cid}{image_ext}"
        gt_path = out / "gt" / f"{cid}.png"
        save_image(img_path, image)
        save_image(gt_path, gt)
        entries.append(ManifestEntry(cid, img_path, gt_path, "train" if i < n_train else "test"))
    manifest = out / "manifest.jsonl"
    write_manifest(manifest, entries)
    return manifest


def load_cases(manifest, split: str | None = None):
    """``[(id, image, gt), ...]`` for the requested split."""
    return [(e.id, load_image(e.image), load_mask(e.gt)) for e in read_manifest(manifest, split)]
