"""Finite-difference and oracle verification suites.

Each check returns a :class:`CheckResult`; :func:`run_suites` collects them by
module. The same checks back the ``gradcheck`` CLI command and the
acceptance tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .disttrans import squared_edt
from .fields import gradient
from .levelset import (
    EnergyWeights,
    EvolutionConfig,
    dirac,
    energy,
    energy_gradient_c,
    energy_gradient_phi,
    evolution_step,
    heaviside,
    region_constants,
)
from .neuralnet import LayerSpec, backward_full, init_params, network_forward
from .neuralnet.layers import conv, deconv, logistic_head, maxpool, relu, skip_concat

MODULES = ("levelset", "disttrans", "neuralnet")


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name}: {self.value:.3g} (tol {self.tolerance:g}, {self.seconds:.2f}s){extra}"


def rel_error(a, b, floor=1e-6) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def _timed(fn: Callable[[], tuple[bool, float, float, str]], name: str) -> CheckResult:
    t0 = time.perf_counter()
    passed, value, tol, detail = fn()
    return CheckResult(name, bool(passed), float(value), tol, time.perf_counter() - t0, detail)


# -- level set ---------------------------------------------------------------

CHECK_WEIGHTS = EnergyWeights(mu=0.3, nu=-0.5, alpha=1.0, lambda1=1.0, lambda2=1.0, epsilon=1.0)


def random_instance(rng, shape):
    """Smooth-ish random phi plus uniform data field and random mask."""
    phi = rng.normal(0.0, 2.0, shape)
    u = rng.uniform(0.0, 1.0, shape)
    gt = rng.uniform(size=shape) < 0.5
    return phi, u, gt


def energy_gradient_errors(phi, u, gt, w, mode, h=1e-4, grad_floor=0.1):
    """Relative errors of the analytic phi-gradient against central differences,
    restricted to pixels with ``|grad phi| > grad_floor``."""
    c = region_constants(u, phi, w.epsilon, mode)
    g = energy_gradient_phi(u, phi, gt, c, w, mode)
    mask = gradient(phi).norm() > grad_floor
    errs = []
    for i, j in zip(*np.nonzero(mask)):
        p = phi.copy()
        p[i, j] += h
        ep = energy(u, p, gt, c, w, mode)
        p[i, j] -= 2 * h
        em = energy(u, p, gt, c, w, mode)
        errs.append(rel_error(g[i, j], (ep - em) / (2 * h)))
    return np.asarray(errs)


def check_energy_gradient(n=20, size=12, seed=0, tol=1e-4):
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(n):
            phi, u, gt = random_instance(rng, (size, size))
            mode = ("as_written", "feature_map")[k % 2]
            errs = energy_gradient_errors(phi, u, gt, CHECK_WEIGHTS, mode)
            if errs.size:
                worst = max(worst, float(errs.max()))
        return worst <= tol, worst, tol, f"{n} instances {size}x{size}"

    return _timed(run, "energy_gradient_phi vs finite differences")


def check_stationarity(n=100, size=16, seed=1, tol=1e-10):
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(n):
            phi, u, _ = random_instance(rng, (size, size))
            mode = ("as_written", "feature_map")[k % 2]
            c = region_constants(u, phi, CHECK_WEIGHTS.epsilon, mode)
            worst = max(worst, *map(abs, energy_gradient_c(u, phi, c, CHECK_WEIGHTS, mode)))
        return worst <= tol, worst, tol, f"{n} instances"

    return _timed(run, "energy_gradient_c vanishes at region constants")


def check_heaviside_dirac(n=100, seed=2, tol=1e-6):
    def run():
        rng = np.random.default_rng(seed)
        tau = rng.uniform(-5.0, 5.0, n)
        symmetric, worst, h = True, 0.0, 1e-5
        for eps in (0.25, 1.0, 2.0):
            symmetric &= bool(np.all(heaviside(tau, eps) + heaviside(-tau, eps) == 1.0))
            numeric = (heaviside(tau + h, eps) - heaviside(tau - h, eps)) / (2 * h)
            worst = max(worst, float(rel_error(numeric, dirac(tau, eps)).max()))
        detail = "H(t)+H(-t)=1 exact" if symmetric else "H(t)+H(-t)!=1"
        return symmetric and worst <= tol, worst, tol, detail

    return _timed(run, "heaviside/dirac identities")


def check_descent(n=100, size=16, seed=3, eta=1e-3, required=95):
    def run():
        rng = np.random.default_rng(seed)
        w = CHECK_WEIGHTS
        hits = 0
        for k in range(n):
            phi, u, gt = random_instance(rng, (size, size))
            mode = ("as_written", "feature_map")[k % 2]
            cfg = EvolutionConfig(eta=eta, include_supervision_in_evolution=True, data_field_mode=mode)
            c = region_constants(u, phi, w.epsilon, mode)
            e0 = energy(u, phi, gt, c, w, mode)
            new = evolution_step(phi, u, gt, c, w, cfg)
            hits += energy(u, new, gt, c, w, mode) < e0
        return hits >= required, hits, required, f"{hits}/{n} steps decrease energy"

    return _timed(run, "single evolution step descends")


# -- distance transform ------------------------------------------------------


def brute_force_sq_edt(mask) -> np.ndarray:
    mask = np.asarray(mask, bool)
    bg = np.argwhere(~mask)
    out = np.zeros(mask.shape)
    if bg.size == 0:
        return np.full(mask.shape, np.inf)
    for i, j in np.argwhere(mask):
        out[i, j] = np.min((bg[:, 0] - i) ** 2 + (bg[:, 1] - j) ** 2)
    return out


def check_edt(n=100, size=32, seed=4):
    def run():
        rng = np.random.default_rng(seed)
        bad = 0
        for _ in range(n):
            mask = rng.uniform(size=(size, size)) < rng.uniform(0.3, 0.95)
            mask[rng.integers(size), rng.integers(size)] = False
            if not np.array_equal(squared_edt(mask), brute_force_sq_edt(mask)):
                bad += 1
        return bad == 0, bad, 0, f"{n - bad}/{n} masks exact"

    return _timed(run, "edt equals brute-force scan")


# -- network -----------------------------------------------------------------


def network_gradient_errors(layers, in_shape, seed=0, h=1e-5, n_probe=6):
    """Worst relative error of parameter and input gradients of ``sum(r * y)``."""
    rng = np.random.default_rng(seed)
    params = init_params(layers, in_shape[0], seed)
    # shift biases off zero so ReLU kinks are not hit exactly
    params = type(params)(
        tuple(None if p is None else (p[0], rng.normal(0, 0.1, p[1].shape)) for p in params),
        params.seed,
    )
    x = rng.uniform(0.0, 1.0, in_shape)
    y, trace = network_forward(layers, params, x)
    r = rng.normal(size=y.shape)
    grads, gx = backward_full(layers, params, trace, r)

    def loss(ps, xx):
        return float(np.sum(r * network_forward(layers, ps, xx)[0]))

    worst = 0.0
    for li, p in enumerate(params):
        if p is None:
            continue
        for ti in range(2):
            t = p[ti]
            for flat in rng.choice(t.size, min(n_probe, t.size), replace=False):
                idx = np.unravel_index(flat, t.shape)

                def bumped(delta):
                    arrays = [list(q) if q is not None else None for q in params]
                    a = arrays[li][ti].copy()
                    a[idx] += delta
                    arrays[li][ti] = a
                    return type(params)(tuple(None if q is None else tuple(q) for q in arrays), params.seed)

                fd = (loss(bumped(h), x) - loss(bumped(-h), x)) / (2 * h)
                worst = max(worst, float(rel_error(grads[li][ti][idx], fd)))
    for flat in rng.choice(x.size, min(n_probe, x.size), replace=False):
        idx = np.unravel_index(flat, x.shape)
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        fd = (loss(params, xp) - loss(params, xm)) / (2 * h)
        worst = max(worst, float(rel_error(gx[idx], fd)))
    return worst


def layer_kind_cases() -> dict[str, tuple[list[LayerSpec], tuple[int, int, int]]]:
    """Small networks isolating each layer kind (heads make the output scalar-per-pixel)."""
    return {
        "conv": ([conv(3), logistic_head()], (2, 8, 8)),
        "conv_stride2": ([conv(2, stride=2), logistic_head()], (1, 8, 8)),
        "relu": ([conv(3), relu(), logistic_head()], (1, 8, 8)),
        "maxpool": ([conv(2), maxpool(), logistic_head()], (1, 8, 8)),
        "deconv": ([conv(2), maxpool(), deconv(3, source=1), logistic_head()], (1, 8, 8)),
        "skip_concat": ([conv(2), relu(), maxpool(), deconv(2, source=2), skip_concat(source=1), logistic_head()], (1, 8, 8)),
        "logistic_head": ([logistic_head()], (3, 6, 6)),
        "composite_3layer": ([conv(4), relu(), conv(2), logistic_head()], (1, 10, 10)),
    }


def check_network(tol=1e-3, seed=5):
    def run():
        worst, detail = 0.0, []
        for name, (layers, shape) in layer_kind_cases().items():
            e = network_gradient_errors(layers, shape, seed)
            detail.append(f"{name}={e:.1e}")
            worst = max(worst, e)
        return worst <= tol, worst, tol, " ".join(detail)

    return _timed(run, "network layer gradients vs finite differences")


SUITES: dict[str, list[Callable[[], CheckResult]]] = {
    "levelset": [check_heaviside_dirac, check_energy_gradient, check_stationarity, check_descent],
    "disttrans": [check_edt],
    "neuralnet": [check_network],
}


def run_suites(module: str = "all") -> list[CheckResult]:
    names = MODULES if module == "all" else (module,)
    if any(n not in SUITES for n in names):
        raise ValueError(f"unknown module {module!r}; choose all or one of {MODULES}")
    return [check() for n in names for check in SUITES[n]]
