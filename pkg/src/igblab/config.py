"""Run configuration: defaults, JSON files, environment and flag overrides.

Precedence, lowest to highest: built-in defaults, the JSON file given by
``--config``, ``IGB_<FIELD>`` environment variables, command-line flags.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .mathkit import QuadratureSpec
from .netsim import ArchitectureSpec, DataSpec

ENV_PREFIX = "IGB_"


@dataclass
class RunConfig:
    activation: str = "relu"
    pool: str = "none"
    kernel: int = 1
    depth: int = 1
    width: list = field(default_factory=lambda: [100])
    gain: float = 2.0 ** 0.5
    offset: float = 0.0
    classes: int = 2
    class_variances: list = field(default_factory=lambda: [1.0])
    bias_mode: str = "zero"
    bias_scale: float = 0.0
    dataset_size: int = 10_000
    input_dim: int = 3072
    ensemble: int | None = None
    seed: int = 0
    bins: int = 51
    threads: int = 1
    precision: str = "single"
    batch_size: int | None = None
    quad_nodes: int = 201
    quad_radius: float = 8.0
    quad_scheme: str = "gauss-legendre"
    grid_points: int = 2001
    finite_size: bool = False
    ks_null_replicas: int = 1000
    out: str | None = None
    axis: str | None = None
    values: list | None = None
    simulate: bool = True

    def architecture(self) -> ArchitectureSpec:
        return ArchitectureSpec(
            depth=self.depth, widths=tuple(self.width), activation=self.activation,
            pooling=self.pool, kernel=self.kernel, gain=self.gain,
            bias_mode=self.bias_mode, bias_scale=self.bias_scale, class_count=self.classes)

    def data(self) -> DataSpec:
        return DataSpec(input_dim=self.input_dim, dataset_size=self.dataset_size,
                        offset=self.offset, class_variances=tuple(self.class_variances),
                        class_count=self.classes)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad_nodes, self.quad_radius, self.quad_scheme)

    def replicas(self, default: int) -> int:
        return default if self.ensemble is None else self.ensemble

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_LIST_FIELDS = {"width": int, "class_variances": float, "values": float}
_INT_FIELDS = {"kernel", "depth", "classes", "dataset_size", "input_dim", "ensemble", "seed",
               "bins", "threads", "batch_size", "quad_nodes", "grid_points", "ks_null_replicas"}
_FLOAT_FIELDS = {"gain", "offset", "bias_scale", "quad_radius"}
_BOOL_FIELDS = {"finite_size", "simulate"}


def _coerce(name: str, value):
    try:
        if value is None:
            return None
        if name in _LIST_FIELDS:
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            return [_LIST_FIELDS[name](v) for v in value]
        if name in _INT_FIELDS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if name in _FLOAT_FIELDS:
            return float(value)
        if name in _BOOL_FIELDS:
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no"):
                    raise ValueError(value)
                return low in ("1", "true", "yes")
            return bool(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value {value!r} for {name}", name) from exc


def load_json(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", "config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}", "config") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object", "config")
    unknown = sorted(set(raw) - set(_FIELDS) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}", unknown[0])
    return {k: v for k, v in raw.items() if k != "command"}


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name in _FIELDS:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            out[name] = environ[key]
    return out


def resolve(file_values: dict | None = None, env: dict | None = None,
            flags: dict | None = None) -> RunConfig:
    """Merge the layers into a validated RunConfig."""
    cfg = RunConfig()
    for layer in (file_values or {}, env or {}, flags or {}):
        for name, value in layer.items():
            if value is None or name not in _FIELDS:
                continue
            setattr(cfg, name, _coerce(name, value))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.pool == "avg":
        cfg.pool = "average"
    cfg.architecture()
    cfg.data()
    cfg.quadrature()
    if cfg.ensemble is not None and cfg.ensemble < 1:
        raise ConfigError("ensemble must be positive", "ensemble")
    if cfg.threads < 1:
        raise ConfigError("threads must be positive", "threads")
    if cfg.bins < 1:
        raise ConfigError("bins must be positive", "bins")
    if cfg.precision not in ("single", "double"):
        raise ConfigError("precision must be single or double", "precision")
    if cfg.grid_points < 3:
        raise ConfigError("grid_points must be at least 3", "grid_points")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative", "seed")
