"""
Experiment configuration.

Configs are sectioned YAML documents:

    experiment:   algorithm, seed, monte_carlo_runs, num_clients, ball_radius,
                  metrics_every, stop_at_worst_acc
    dataset:      source (synthetic | idx) and its paths or generator settings
    partition:    alpha, sigma, train_samples, test_samples
    model:        hidden_dim (omit for the linear model)
    hyperparams:  eta, gamma, mu (drdm only), tau, m, batch, rounds, c_update
    energy:       proc_energy_per_step, tx_power, model_bits, bandwidth, snr_db
    sweep:        tau_grid, target_worst_acc, snr_grid, bandwidth_grid, alpha_grid,
                  sigma_grid, algorithms

Environment variables prefixed with ``DRDM_`` override file values, with
double underscores separating section and key, e.g. ``DRDM_HYPERPARAMS__ETA=0.1``.
"""

import json
import logging
import os
import re
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import yaml

from core.exceptions import LabError, ParameterError
from evaluation.energy import EnergyParams
from federation.hyperparams import HyperParams

logger = logging.getLogger(__name__)

ENV_PREFIX = "DRDM_"
ALGORITHMS = ("drdm", "drfa", "fedavg", "scaffold")
DATASET_SOURCES = ("synthetic", "idx")

_FLOAT_TEXT = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ConfigurationError(LabError, ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class DatasetConfig:
    """Where the data comes from.

    For ``idx`` the four file paths are required. For ``synthetic`` the
    two-Gaussian generator settings apply to the training set; the test set
    uses ``test_n_per_class``.
    """

    source: str = "synthetic"
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    n_per_class: int = 500
    test_n_per_class: int = 200
    feature_dim: int = 2
    separation: float = 3.0


@dataclass(frozen=True)
class PartitionConfig:
    alpha: float = 0.1
    sigma: float = 0.0
    train_samples: Optional[int] = None
    test_samples: Optional[int] = None


@dataclass(frozen=True)
class ModelConfig:
    hidden_dim: Optional[int] = None


@dataclass(frozen=True)
class SweepConfig:
    tau_grid: Tuple[int, ...] = (5, 10, 20, 30)
    target_worst_acc: float = 0.8
    snr_grid: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    bandwidth_grid: Tuple[float, ...] = (1e6,)
    alpha_grid: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7)
    sigma_grid: Tuple[float, ...] = (0.3, 0.5, 0.7)
    algorithms: Tuple[str, ...] = ("drdm", "drfa", "fedavg", "scaffold")


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete, validated experiment description."""

    algorithm: str = "drdm"
    seed: int = 0
    monte_carlo_runs: int = 10
    num_clients: int = 30
    ball_radius: float = 1e6
    metrics_every: int = 1
    stop_at_worst_acc: Optional[float] = None
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    hyperparams: HyperParams = field(default_factory=HyperParams)
    energy: Optional[EnergyParams] = None
    sweep: SweepConfig = field(default_factory=SweepConfig)


# Section name -> dataclass; the "experiment" section holds the top-level scalars.
_SECTIONS = {
    "dataset": DatasetConfig,
    "partition": PartitionConfig,
    "model": ModelConfig,
    "hyperparams": HyperParams,
    "energy": EnergyParams,
    "sweep": SweepConfig,
}
_EXPERIMENT_KEYS = ("algorithm", "seed", "monte_carlo_runs", "num_clients", "ball_radius",
                    "metrics_every", "stop_at_worst_acc")


def _coerce(value: Any, annotation, key: str):
    """Check ``value`` against a field annotation, converting lists to tuples."""
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key)
    if origin in (tuple, Tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"expected a list, got {type(value).__name__}", key)
        return tuple(_coerce(v, args[0], f"{key}[{i}]") for i, v in enumerate(value))
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected a boolean, got {value!r}", key)
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", key)
        return value
    if annotation is float:
        # YAML 1.1 reads "1e6" as a string.
        if isinstance(value, str) and _FLOAT_TEXT.match(value.strip()):
            return float(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected a number, got {value!r}", key)
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", key)
        return value
    return value


def _build_section(cls, raw: Mapping[str, Any], section: str):
    if not isinstance(raw, Mapping):
        raise ConfigurationError(f"expected a mapping, got {type(raw).__name__}", section)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    values = {}
    for key, value in raw.items():
        if key not in names:
            raise ConfigurationError("unknown key", f"{section}.{key}")
        values[key] = _coerce(value, hints[key], f"{section}.{key}")
    try:
        return cls(**values)
    except ParameterError as e:
        raise ConfigurationError(str(e), section) from e


def config_from_dict(data: Optional[Mapping[str, Any]]) -> ExperimentConfig:
    """Validate a nested mapping and fill defaults."""
    data = dict(data or {})
    unknown = set(data) - set(_SECTIONS) - {"experiment"}
    if unknown:
        raise ConfigurationError("unknown section", sorted(unknown)[0])

    experiment = data.get("experiment") or {}
    if not isinstance(experiment, Mapping):
        raise ConfigurationError("expected a mapping", "experiment")
    hints = typing.get_type_hints(ExperimentConfig)
    top = {}
    for key, value in experiment.items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigurationError("unknown key", f"experiment.{key}")
        top[key] = _coerce(value, hints[key], f"experiment.{key}")

    algorithm = top.get("algorithm", "drdm")
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"must be one of {ALGORITHMS}, got {algorithm!r}", "experiment.algorithm")

    hp_raw = data.get("hyperparams") or {}
    if not isinstance(hp_raw, Mapping):
        raise ConfigurationError("expected a mapping", "hyperparams")
    hp_raw = dict(hp_raw)
    if algorithm != "drdm":
        if "mu" in hp_raw:
            raise ConfigurationError(f"only applies to drdm, not {algorithm}", "hyperparams.mu")
        hp_raw["mu"] = 0.0

    sections = {}
    for name, cls in _SECTIONS.items():
        raw = hp_raw if name == "hyperparams" else data.get(name)
        if name == "energy" and raw is None:
            sections[name] = None
            continue
        sections[name] = _build_section(cls, raw or {}, name)

    cfg = ExperimentConfig(**top, **sections)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.num_clients < 1:
        raise ConfigurationError("must be at least 1", "experiment.num_clients")
    if cfg.monte_carlo_runs < 1:
        raise ConfigurationError("must be at least 1", "experiment.monte_carlo_runs")
    if cfg.metrics_every < 1:
        raise ConfigurationError("must be at least 1", "experiment.metrics_every")
    if not cfg.ball_radius > 0:
        raise ConfigurationError("must be positive", "experiment.ball_radius")
    if cfg.seed < 0:
        raise ConfigurationError("must be non-negative", "experiment.seed")
    if cfg.stop_at_worst_acc is not None and not 0 <= cfg.stop_at_worst_acc <= 1:
        raise ConfigurationError("must lie in [0, 1]", "experiment.stop_at_worst_acc")
    hp = cfg.hyperparams
    if hp.m > cfg.num_clients:
        raise ConfigurationError(f"m={hp.m} exceeds num_clients={cfg.num_clients}", "hyperparams.m")
    if hp.eta <= 0:
        raise ConfigurationError("must be positive", "hyperparams.eta")
    if hp.gamma <= 0 and cfg.algorithm in ("drdm", "drfa"):
        raise ConfigurationError("must be positive", "hyperparams.gamma")
    ds = cfg.dataset
    if ds.source not in DATASET_SOURCES:
        raise ConfigurationError(f"must be one of {DATASET_SOURCES}, got {ds.source!r}", "dataset.source")
    if ds.source == "idx":
        for key in ("train_images", "train_labels", "test_images", "test_labels"):
            if getattr(ds, key) is None:
                raise ConfigurationError("required for idx datasets", f"dataset.{key}")
    elif ds.n_per_class < 1 or ds.test_n_per_class < 1 or ds.feature_dim < 1:
        raise ConfigurationError("synthetic sizes must be at least 1", "dataset")
    if not cfg.partition.alpha > 0:
        raise ConfigurationError("must be positive", "partition.alpha")
    if cfg.partition.sigma < 0:
        raise ConfigurationError("must be non-negative", "partition.sigma")
    if cfg.model.hidden_dim is not None and cfg.model.hidden_dim < 1:
        raise ConfigurationError("must be at least 1", "model.hidden_dim")
    if not cfg.sweep.tau_grid or min(cfg.sweep.tau_grid) < 1:
        raise ConfigurationError("must be a non-empty list of positive integers", "sweep.tau_grid")
    if any(not a > 0 for a in cfg.sweep.alpha_grid):
        raise ConfigurationError("values must be positive", "sweep.alpha_grid")
    if any(s < 0 for s in cfg.sweep.sigma_grid):
        raise ConfigurationError("values must be non-negative", "sweep.sigma_grid")
    for name in cfg.sweep.algorithms:
        if name not in ALGORITHMS:
            raise ConfigurationError(f"must be one of {ALGORITHMS}, got {name!r}", "sweep.algorithms")


def parse_config(text: str) -> ExperimentConfig:
    """Parse YAML text into a validated config."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"malformed YAML: {e}") from e
    if data is not None and not isinstance(data, Mapping):
        raise ConfigurationError("top level must be a mapping of sections")
    return config_from_dict(data)


def _parse_env_value(value: str) -> Any:
    """Parse an environment string into a YAML-compatible value."""
    lowered = value.lower()
    if lowered in ("null", "none"):
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    if lowered in ("true", "yes"):
        return True
    if lowered in ("false", "no"):
        return False
    if value.startswith("[") and value.endswith("]"):
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            pass
    return value


def _deep_update(target: Dict, source: Mapping):
    """Recursively update a nested dictionary."""
    for key, value in source.items():
        if key in target and isinstance(target[key], dict) and isinstance(value, Mapping):
            _deep_update(target[key], value)
        else:
            target[key] = value


def environment_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Nested overrides from ``DRDM_SECTION__KEY`` variables.

    Prefixed variables without a ``__`` separator (such as data directories
    used by tests) are not config keys and are ignored.
    """
    environ = os.environ if environ is None else environ
    overrides: Dict[str, Any] = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        parts = name[len(ENV_PREFIX):].lower().split("__")
        ref = overrides
        for part in parts[:-1]:
            ref = ref.setdefault(part, {})
        ref[parts[-1]] = _parse_env_value(value)
        logger.debug(f"Config override from environment: {name}")
    return overrides


def load_config(path: Union[str, Path], environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read a YAML config file and apply environment overrides."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from e
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"malformed YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"top level of {path} must be a mapping of sections")
    _deep_update(data, environment_overrides(environ))
    cfg = config_from_dict(data)
    logger.info(f"Loaded {cfg.algorithm} configuration from {path}")
    return cfg


def _plain(value):
    if is_dataclass(value):
        return {k: _plain(v) for k, v in asdict(value).items()}
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Canonical nested form; ``mu`` is omitted for algorithms other than drdm."""
    data: Dict[str, Any] = {"experiment": {key: getattr(cfg, key) for key in _EXPERIMENT_KEYS}}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        if section is None:
            continue
        data[name] = _plain(section)
    if cfg.algorithm != "drdm":
        data["hyperparams"].pop("mu", None)
    return data


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML text; ``parse_config(dump_config(cfg)) == cfg``."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=False)


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """Copy of ``cfg`` with top-level fields replaced and re-validated."""
    updated = replace(cfg, **changes)
    _validate(updated)
    return updated

