"""JSON configuration for synthesis and training runs.

Every section is checked against the dataclass it populates; unknown keys and
missing keys are both errors, so a config file always spells out the full
setting it runs with. A ``seed`` is mandatory at the top level.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from ..disttrans import ConversionOptions
from ..errors import ConfigError, DrlsError
from ..levelset import EnergyWeights, EvolutionConfig
from ..neuralnet import LayerSpec
from .phantom import PhantomSpec

SUPERVISION_MODES = ("per_step", "final_step")
NETWORK_DTYPES = ("float32", "float64")


@dataclass(frozen=True)
class TrainingOptions:
    epochs: int = 30
    learning_rate: float = 1e-4
    patience: int = 5
    supervision: str = "per_step"

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.supervision not in SUPERVISION_MODES:
            raise ConfigError(f"supervision must be one of {SUPERVISION_MODES}")


@dataclass(frozen=True)
class NetworkConfig:
    in_channels: int
    layers: tuple[LayerSpec, ...]
    dtype: str = "float64"  # arithmetic of the network; level-set side is always float64

    def __post_init__(self):
        if self.in_channels < 1:
            raise ConfigError("network.in_channels must be >= 1")
        if self.dtype not in NETWORK_DTYPES:
            raise ConfigError(f"network.dtype must be one of {NETWORK_DTYPES}")


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    weights: EnergyWeights
    evolution: EvolutionConfig
    conversion: ConversionOptions
    network: NetworkConfig
    training: TrainingOptions


@dataclass(frozen=True)
class Jitter:
    """Per-case randomization applied on top of the base phantom."""

    radius: tuple[float, float] | None = None
    center: bool = False


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    phantom: PhantomSpec
    jitter: Jitter
    train_fraction: float = 0.8


def _keys(cls):
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(section: str, data, allowed, required=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown keys {unknown}")
    missing = sorted(set(allowed if required is None else required) - set(data))
    if missing:
        raise ConfigError(f"{section}: missing keys {missing}")


def _build(section, cls, data, required=None, **overrides):
    allowed = _keys(cls) - set(overrides)
    _check_keys(section, data, allowed, required)
    try:
        return cls(**data, **overrides)
    except ConfigError:
        raise
    except (TypeError, ValueError, DrlsError) as err:
        raise ConfigError(f"{section}: {err}") from err


def _seed(data):
    if "seed" not in data:
        raise ConfigError("seed is mandatory")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return seed


def _layer(i, entry):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"network.layers[{i}]: needs a 'kind'")
    return _build(f"network.layers[{i}]", LayerSpec, entry, required=("kind",))


def parse_train_config(data: dict) -> TrainConfig:
    _check_keys("config", data, ("seed", "weights", "evolution", "conversion", "network", "training"))
    net = data["network"]
    _check_keys("network", net, ("in_channels", "layers", "dtype"))
    if not isinstance(net["layers"], list) or not net["layers"]:
        raise ConfigError("network.layers must be a non-empty list")
    return TrainConfig(
        seed=_seed(data),
        weights=_build("weights", EnergyWeights, data["weights"]),
        evolution=_build("evolution", EvolutionConfig, data["evolution"]),
        conversion=_build("conversion", ConversionOptions, data["conversion"]),
        network=NetworkConfig(
            int(net["in_channels"]), tuple(_layer(i, e) for i, e in enumerate(net["layers"])), net["dtype"]
        ),
        training=_build("training", TrainingOptions, data["training"]),
    )


def parse_synth_config(data: dict) -> SynthConfig:
    _check_keys("config", data, ("seed", "phantom", "jitter", "train_fraction"))
    seed = _seed(data)
    phantom = dict(data["phantom"])
    if "center" in phantom and phantom["center"] is not None:
        phantom["center"] = tuple(phantom["center"])
    spec = _build("phantom", PhantomSpec, phantom, required=_keys(PhantomSpec) - {"seed", "center"}, seed=seed)
    jitter = dict(data["jitter"])
    if jitter.get("radius") is not None:
        jitter["radius"] = tuple(jitter["radius"])
    frac = data["train_fraction"]
    if not 0.0 <= frac <= 1.0:
        raise ConfigError("train_fraction must lie in [0, 1]")
    return SynthConfig(seed, spec, _build("jitter", Jitter, jitter), float(frac))


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def train_config_to_dict(cfg: TrainConfig) -> dict:
    return _plain(cfg)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from err


def load_train_config(path) -> TrainConfig:
    return parse_train_config(read_json(path))


def load_synth_config(path) -> SynthConfig:
    return parse_synth_config(read_json(path))
