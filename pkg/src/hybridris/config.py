"""YAML sweep configuration with ``key=value`` command-line overrides.

Layout::

    drops: 100
    master_seed: 0
    power_grid: [30, 35, 40]
    modes: [NoRis, Passive, Active]
    scenarios: [StrongDirect, WeakDirect]
    scene:      {num_ris_elements: 400, ...}
    optimizer:  {phase_grid_size: 64, ...}
    thresholds: {weak_below: 40, ...}

An override addresses a field either as ``section.key`` or, when the name is
unique across sections, as a bare ``key``.
"""
from __future__ import annotations

import dataclasses
import os
from typing import Any, Iterable, Optional

import yaml

from .channel import SceneConfig
from .controller import ControllerThresholds
from .optimize import OptimizerOptions
from .sim import SweepConfig

__all__ = ["ConfigError", "load_config", "config_from_mapping", "parse_override"]


class ConfigError(ValueError):
    """Invalid, unknown or malformed configuration entry."""


SECTIONS = {"scene": SceneConfig, "optimizer": OptimizerOptions,
            "thresholds": ControllerThresholds}
TOP_LEVEL = [f.name for f in dataclasses.fields(SweepConfig) if f.name not in SECTIONS]


def _field_names(cls) -> list[str]:
    return [f.name for f in dataclasses.fields(cls)]


def _resolve(key: str) -> tuple[Optional[str], str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SECTIONS or name not in _field_names(SECTIONS[section]):
            raise ConfigError(f"unknown configuration key {key!r}")
        return section, name
    owners = [s for s, cls in SECTIONS.items() if key in _field_names(cls)]
    if key in TOP_LEVEL:
        owners.append(None)
    if not owners:
        raise ConfigError(f"unknown configuration key {key!r}")
    if len(owners) > 1:
        raise ConfigError(f"ambiguous key {key!r}; qualify it with a section name")
    return owners[0], key


def parse_override(text: str) -> tuple[Optional[str], str, Any]:
    """Split ``section.key=value``; the value is parsed as YAML."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed value in override {text!r}: {exc}") from None
    section, name = _resolve(key)
    return section, name, value


def _tuple(value, name):
    if isinstance(value, (str, bytes)) or not isinstance(value, Iterable):
        value = [value]
    return tuple(value)


def _build(cls, values: dict, label: str):
    unknown = set(values) - set(_field_names(cls))
    if unknown:
        raise ConfigError(f"unknown key(s) in {label}: {', '.join(sorted(unknown))}")
    for key in ("bs_position", "ris_position", "user_center", "split_grid"):
        if key in values and values[key] is not None:
            values[key] = _tuple(values[key], key)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {label} configuration: {exc}") from None


def config_from_mapping(data: dict, overrides: Iterable[str] = ()) -> SweepConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    sections = {s: dict(data.get(s) or {}) for s in SECTIONS}
    for s in SECTIONS:
        if not isinstance(data.get(s) or {}, dict):
            raise ConfigError(f"section {s!r} must be a mapping")
    top = {k: v for k, v in data.items() if k not in SECTIONS}
    unknown = set(top) - set(TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    for text in overrides:
        section, name, value = parse_override(text)
        (top if section is None else sections[section])[name] = value

    built = {s: _build(cls, sections[s], s) for s, cls in SECTIONS.items()}
    for key in ("power_grid", "modes", "scenarios"):
        if key in top:
            top[key] = _tuple(top[key], key)
    try:
        return SweepConfig(**top, **built)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep configuration: {exc}") from None


def load_config(path: Optional[str], overrides: Iterable[str] = (),
                use_defaults: bool = False) -> SweepConfig:
    """Read a sweep configuration file and apply ``overrides`` on top.

    A missing (or ``None``) path is only accepted with ``use_defaults``, in
    which case the built-in defaults stand in for the file.
    """
    data: dict = {}
    if path is not None and os.path.exists(path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed configuration file {path}: {exc}") from None
    elif not use_defaults:
        raise ConfigError(f"configuration file not found: {path}"
                          if path else "no configuration file given")
    return config_from_mapping(data, overrides)
