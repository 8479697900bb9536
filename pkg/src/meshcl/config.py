"""Config-file support: YAML mappings mirroring the CLI flags.

A config file is a YAML mapping with optional ``train``, ``augment``, ``arch``
sections (fields named after :class:`TrainConfig`, :class:`AugmentationPolicy`
and :class:`ArchitectureSpec`) plus, for experiment specs, top-level sweep
fields and a ``dataset`` section.  Values given on the command line always win
over the file.
"""

from __future__ import annotations

import dataclasses
from typing import Any

import yaml

from .augment import AugmentationPolicy
from .experiment import ExperimentSpec
from .model import ArchitectureSpec
from .training import TrainConfig


class ConfigError(ValueError):
    """Unusable config file content."""


def load_config_file(path) -> dict:
    """Parse a YAML config file into a dict (empty file -> empty dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def section(cfg: dict, name: str) -> dict:
    sub = cfg.get(name, {})
    if sub is None:
        return {}
    if not isinstance(sub, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return sub


def _coerce(field: dataclasses.Field, value: Any) -> Any:
    t = field.type
    if value is None:
        return None
    if t in ("int", int):
        return int(value)
    if t in ("float", float):
        return float(value)
    if t in ("bool", bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"field {field.name} expects true/false")
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return value


def _build(cls, data: dict, overrides: dict, what: str):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown {what} fields: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, f in names.items():
        if name in overrides and overrides[name] is not None:
            kwargs[name] = _coerce(f, overrides[name])
        elif name in data:
            kwargs[name] = _coerce(f, data[name])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc


def build_train_config(data: dict, **overrides) -> TrainConfig:
    """TrainConfig from a config section; non-None ``overrides`` win."""
    return _build(TrainConfig, data, overrides, "train config")


def build_policy(data: dict, **overrides) -> AugmentationPolicy:
    """AugmentationPolicy from a config section; non-None ``overrides`` win."""
    return _build(AugmentationPolicy, data, overrides, "augmentation policy")


def build_arch(data: dict, **overrides) -> ArchitectureSpec:
    """ArchitectureSpec from a config section; non-None ``overrides`` win."""
    return _build(ArchitectureSpec, data, overrides, "architecture")


def build_experiment_spec(cfg: dict, **overrides) -> ExperimentSpec:
    """ExperimentSpec from a full experiment file.

    Sweep fields (``fractions``, ``repeats``, ``arms``, ``eval_fraction``,
    ``seed``) sit at the top level; ``train`` / ``augment`` / ``arch``
    sections configure the nested dataclasses.  The ``dataset`` and ``out``
    keys are read by the CLI, not here.
    """
    top = {
        k: cfg[k]
        for k in ("fractions", "repeats", "arms", "eval_fraction", "seed")
        if k in cfg
    }
    spec_overrides = dict(overrides)
    nested = {
        "train": build_train_config(section(cfg, "train")),
        "policy": build_policy(section(cfg, "augment")),
        "arch": build_arch(section(cfg, "arch")),
    }
    for key, value in nested.items():
        spec_overrides.setdefault(key, value)
    return _build(ExperimentSpec, top, spec_overrides, "experiment spec")
