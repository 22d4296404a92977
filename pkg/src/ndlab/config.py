"""Experiment configuration: JSON files mapped onto models, grids and laws."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import limiting_law, smooth_bump
from .errors import ConfigError, NdlabError
from .grid import Grid1D
from .jumpmodel import (
    JumpRateModel,
    homogeneous,
    single_factor,
    stratonovich,
    two_factor,
)
from .kernels import kernel_from_name
from .local_solver import LocalDiffusionSpec
from .profiles import profile_from_spec


def load_config(path: Path | str) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    cfg["_base_dir"] = str(path.parent)
    return cfg


def _require(cfg: dict, key: str, section: str):
    if key not in cfg:
        raise ConfigError(f"missing required field {where_str(section, key)}")
    return cfg[key]


def where_str(section: str, key: str) -> str:
    return f"'{section}.{key}'" if section else f"'{key}'"


def build_grid(cfg: dict) -> Grid1D:
    section = cfg.get("grid")
    if not isinstance(section, dict):
        raise ConfigError("missing or malformed 'grid' section ({R, M})")
    try:
        return Grid1D(float(_require(section, "R", "grid")),
                      int(_require(section, "M", "grid")))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc


def build_model(cfg: dict, grid: Grid1D | None = None) -> JumpRateModel:
    section = cfg.get("model")
    if not isinstance(section, dict):
        raise ConfigError("missing or malformed 'model' section")
    base_dir = cfg.get("_base_dir")
    variant = section.get("variant", "single_factor")
    try:
        kernel = kernel_from_name(section.get("kernel", "gaussian"), base_dir)
    except (ValueError, OSError, NdlabError) as exc:
        raise ConfigError(f"model.kernel: {exc}") from exc
    try:
        if variant == "homogeneous":
            return homogeneous(kernel)
        if variant == "single_factor":
            m = profile_from_spec(_require(section, "m", "model"))
            return single_factor(kernel, m, float(_require(section, "alpha", "model")))
        if variant == "two_factor":
            nu = profile_from_spec(_require(section, "nu", "model"))
            g = profile_from_spec(_require(section, "g", "model"))
            return two_factor(kernel, nu, g,
                              float(_require(section, "alpha", "model")),
                              float(_require(section, "alpha_prime", "model")))
        if variant == "stratonovich":
            h = profile_from_spec(_require(section, "h", "model"))
            if grid is None:
                raise ConfigError("stratonovich model needs a grid section")
            return stratonovich(kernel, h, grid)
    except ConfigError:
        raise
    except (ValueError, NdlabError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    raise ConfigError(f"model.variant: unknown variant {variant!r}")


def build_u0(cfg: dict, grid: Grid1D) -> np.ndarray:
    section = cfg.get("u0", {"kind": "constant", "mass": 4.0})
    if not isinstance(section, dict):
        raise ConfigError("'u0' must be an object")
    kind = section.get("kind", "constant")
    mass = float(section.get("mass", 4.0))
    x = grid.nodes
    if kind == "constant":
        raw = np.ones(grid.M)
    elif kind == "bump":
        raw = smooth_bump(x, float(_require(section, "width", "u0")),
                          float(section.get("center", 0.0)))
    elif kind == "gaussian":
        sigma = float(_require(section, "sigma", "u0"))
        raw = np.exp(-0.5 * ((x - float(section.get("center", 0.0))) / sigma) ** 2)
    elif kind == "profile":
        prof = profile_from_spec(_require(section, "profile", "u0"))
        raw = np.asarray(prof.eval(x), dtype=float)
    else:
        raise ConfigError(f"u0.kind: unknown kind {kind!r}")
    total = grid.h * raw.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ConfigError("u0 must have positive finite mass")
    return raw * (mass / total)


@dataclass(frozen=True)
class TimeSection:
    T: float
    dt: float | None
    scheme: str
    snapshots: tuple


def build_time(cfg: dict, default_T: float = 4000.0) -> TimeSection:
    section = cfg.get("time", {})
    if not isinstance(section, dict):
        raise ConfigError("'time' must be an object")
    scheme = section.get("scheme", "rk4")
    if scheme not in ("euler", "rk4"):
        raise ConfigError(f"time.scheme: unknown scheme {scheme!r}")
    dt = section.get("dt")
    return TimeSection(
        T=float(section.get("T", default_T)),
        dt=None if dt is None else float(dt),
        scheme=scheme,
        snapshots=tuple(float(s) for s in section.get("snapshots", ())),
    )


def build_law(cfg: dict, model: JumpRateModel | None = None) -> LocalDiffusionSpec:
    section = cfg.get("law")
    if section in (None, "from_model", {"from_model": True}):
        if model is None:
            raise ConfigError("'law' section required when no model is given")
        return limiting_law(model)
    if not isinstance(section, dict):
        raise ConfigError("'law' must be an object or 'from_model'")
    if section.get("from_model"):
        if model is None:
            raise ConfigError("law.from_model needs a model section")
        return limiting_law(model)
    try:
        D = profile_from_spec(_require(section, "D", "law"))
        qp = section.get("q_prime")
        nu = section.get("nu")
        return LocalDiffusionSpec(
            q=float(_require(section, "q", "law")),
            D=D,
            q_prime=None if qp is None else float(qp),
            nu=None if nu is None else profile_from_spec(nu),
        )
    except ConfigError:
        raise
    except (ValueError, NdlabError) as exc:
        raise ConfigError(f"law: {exc}") from exc


def law_metadata(spec: LocalDiffusionSpec) -> dict:
    return {
        "q": spec.q,
        "q_prime": spec.q_prime,
        "D_spec": getattr(spec.D, "params", {}) | {"name": spec.D.name.value},
        "nu_spec": None if spec.nu is None
        else getattr(spec.nu, "params", {}) | {"name": spec.nu.name.value},
    }
