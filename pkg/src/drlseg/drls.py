"""Recurrent coupling of the encoder-decoder with level-set evolution.

One forward pass::

    y   = net(image);        phi = convert(y)
    repeat nsteps:
        phi <- evolve(phi)   (inner_iters explicit steps, fresh c1/c2 each)
        y   = net(phi + 0.5);  phi = convert(y)
    mask = phi >= 0

with ``convert(y) = xi(y) + (y - t)``, where ``xi`` is the normalized
signed distance map of ``y >= t`` (``t`` the binarization threshold, 0.5 by
default). The distance part is piecewise constant
in ``y`` and is treated as a constant during training, so ``d phi / d y = 1``
exactly. Training minimizes the level-set energy of every recurrence step;
each step's network input is treated as a constant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .disttrans import ConversionOptions, to_levelset
from .errors import ConfigError, DegenerateRegionError, DivergenceError, StructuralError
from .fields import as_field, as_mask
from .levelset import (
    EnergyWeights,
    EvolutionConfig,
    RegionConstants,
    energy,
    energy_gradient_phi,
    evolution_step,
    heaviside,
    region_constants,
)
from .neuralnet import LayerSpec, NetworkParams, network_backward, network_forward, sgd_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DrlsModel:
    layers: tuple[LayerSpec, ...]
    params: NetworkParams
    weights: EnergyWeights = EnergyWeights()
    evolution: EvolutionConfig = EvolutionConfig()
    conversion: ConversionOptions = ConversionOptions()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.layers) != len(self.params):
            raise StructuralError(f"{len(self.params)} parameter entries for {len(self.layers)} layers")


@dataclass
class RecurrenceTrace:
    """Iterates of one forward pass; entry 0 is the initial conversion."""

    ys: list = field(default_factory=list)
    phis: list = field(default_factory=list)
    constants: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    evolved: list = field(default_factory=list)
    net_traces: list = field(default_factory=list)

    def __len__(self):
        return len(self.phis)


def predict_mask(phi) -> np.ndarray:
    """Foreground where ``H(phi) >= 1/2``, i.e. ``phi >= 0``."""
    return as_field(phi) >= 0


def rescale_for_network(phi) -> np.ndarray:
    """Shift a level set onto the network's [0, 1] input range (clipping the tails)."""
    return np.clip(np.asarray(phi) + 0.5, 0.0, 1.0)


def convert(y, opts: ConversionOptions = ConversionOptions()) -> np.ndarray:
    """Level set of a network output: distance geometry plus the output itself.

    Both parts share the sign of ``y - t``, so ``phi >= 0`` is exactly the
    binarized map; values lie in [-1, 1].
    """
    y = as_field(y)
    return to_levelset(y, opts) + (y - opts.binarize_threshold)


def _step_energy(model, y, phi, gt):
    w = model.weights
    if gt is None and w.alpha > 0:
        w = replace(w, alpha=0.0)
    mode = model.evolution.data_field_mode
    c = region_constants(y, phi, w.epsilon, mode)
    return c, energy(y, phi, gt, c, w, mode)


def _forward(model: DrlsModel, image, gt=None, keep_net_traces=False):
    image = as_field(image)
    if image.min() < 0 or image.max() > 1:
        raise ValueError("image values must lie in [0, 1]")
    if gt is not None:
        gt = as_mask(gt)
    w, cfg = model.weights, model.evolution
    trace = RecurrenceTrace()
    net_input = image
    phi = None
    for step in range(cfg.nsteps + 1):
        try:
            if step > 0:
                y_prev = trace.ys[-1]
                gt_evo = gt if cfg.include_supervision_in_evolution else None
                if gt_evo is None and cfg.include_supervision_in_evolution and w.alpha > 0:
                    w_evo = replace(w, alpha=0.0)
                else:
                    w_evo = w
                for _ in range(cfg.inner_iters):
                    phi = evolution_step(phi, y_prev, gt_evo, None, w_evo, cfg)
                trace.evolved.append(phi)
                net_input = rescale_for_network(phi)
            y, net_trace = network_forward(model.layers, model.params, net_input)
            phi = convert(y, model.conversion)
            c, e = _step_energy(model, y, phi, gt)
        except DegenerateRegionError as err:
            raise err.at_step(step) from err
        except StructuralError as err:
            raise StructuralError(f"recurrence step {step}: {err}") from err
        trace.ys.append(y)
        trace.phis.append(phi)
        trace.constants.append(c)
        trace.energies.append(e)
        if keep_net_traces:
            trace.net_traces.append(net_trace)
    return predict_mask(phi), trace


def drls_forward(model: DrlsModel, image, gt=None):
    """Segment ``image``; returns ``(mask, RecurrenceTrace)``.

    ``gt`` only enters the recorded energies (and the evolution, when
    supervision in evolution is enabled).
    """
    return _forward(model, image, gt)


def _loss_gradient_y(model, y, phi, gt, c):
    """d(step energy)/dy through the straight-through conversion."""
    w = model.weights
    mode = model.evolution.data_field_mode
    g = energy_gradient_phi(y, phi, gt, c, w, mode)
    if mode == "feature_map":
        # the data field is y itself
        H = heaviside(phi, w.epsilon)
        g = g + 2.0 * w.lambda1 * (y - c.c1) * H + 2.0 * w.lambda2 * (y - c.c2) * (1.0 - H)
    return g


def sample_loss_and_grads(model: DrlsModel, image, gt, supervision="per_step"):
    """Loss of one sample and its parameter gradient."""
    _, trace = _forward(model, image, gt, keep_net_traces=True)
    steps = range(len(trace)) if supervision == "per_step" else [len(trace) - 1]
    total = None
    loss = 0.0
    for k in steps:
        gy = _loss_gradient_y(model, trace.ys[k], trace.phis[k], gt, trace.constants[k])
        grads = network_backward(model.layers, model.params, trace.net_traces[k], gy)
        loss += trace.energies[k]
        total = grads if total is None else total + grads
    return loss, total


def drls_train(
    model: DrlsModel,
    dataset,
    epochs: int,
    learning_rate: float = 1e-4,
    seed: int = 0,
    patience: int = 5,
    supervision: str = "per_step",
):
    """Plain per-sample SGD on the summed recurrence energy.

    ``dataset`` is a sequence of ``(image, gt)`` pairs. Samples are visited in
    a seeded random order each epoch. The learning rate halves whenever the
    epoch mean loss has not improved for ``patience`` epochs.

    Returns ``(trained_model, per_epoch_mean_loss)``.
    """
    dataset = list(dataset)
    if not dataset:
        raise ConfigError("training dataset is empty")
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    if supervision not in ("per_step", "final_step"):
        raise ConfigError(f"unknown supervision mode {supervision!r}")
    if model.weights.alpha > 0 and any(gt is None for _, gt in dataset):
        raise ConfigError("alpha > 0 needs ground truth for every training sample")
    shape = np.shape(dataset[0][0])
    if any(np.shape(img) != shape or np.shape(gt) != shape for img, gt in dataset):
        raise ConfigError("all training images and masks must share one grid")

    rng = np.random.default_rng(seed)
    lr = learning_rate
    best, stale = math.inf, 0
    history = []
    for epoch in range(epochs):
        losses = []
        for i in rng.permutation(len(dataset)):
            image, gt = dataset[i]
            loss, grads = sample_loss_and_grads(model, image, gt, supervision)
            if not math.isfinite(loss) or not all(np.all(np.isfinite(a)) for a in grads.arrays()):
                raise DivergenceError(epoch, int(i), loss)
            if lr > 0:
                model = replace(model, params=sgd_update(model.params, grads, lr))
            losses.append(loss)
        mean = math.fsum(losses) / len(losses)
        history.append(mean)
        log.info("epoch %d  loss %.6f  lr %.3g", epoch, mean, lr)
        if mean < best:
            best, stale = mean, 0
        else:
            stale += 1
            if stale >= patience:
                lr *= 0.5
                stale = 0
    return model, history


__all__ = [
    "DrlsModel",
    "RecurrenceTrace",
    "RegionConstants",
    "convert",
    "drls_forward",
    "drls_train",
    "predict_mask",
    "rescale_for_network",
    "sample_loss_and_grads",
]
