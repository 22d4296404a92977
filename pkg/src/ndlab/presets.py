"""Shipped experiment presets reproducing the reference figure protocols."""

from __future__ import annotations

import json
from importlib import resources

from .errors import ConfigError

def _root():
    return resources.files("ndlab").joinpath("presets")


def preset_table() -> list[str]:
    """Names of the shipped presets, sorted."""
    return sorted(p.name[:-5] for p in _root().iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = _root() / f"{name}.json"
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_table())}")
    cfg["_base_dir"] = "."
    return cfg
