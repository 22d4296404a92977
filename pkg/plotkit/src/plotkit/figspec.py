"""Figure specifications: which run files to draw, and how.

A spec is a small JSON file::

    {
      "name": "fig1",
      "output": "fig1.png",
      "panels": [
        {
          "title": "m(x) = 1/(1+x^2)",
          "overlays": [
            {"kind": "m-profile", "file": "fig1-left/profile.csv"},
            {"kind": "numeric",   "file": "fig1-left/t4000.csv",
             "color": "blue", "label": "u(t=4000)"},
            {"kind": "predicted", "file": "fig1-left/steady_compare.csv"}
          ],
          "zooms": [{"x": [-1.0, 1.0], "inset": [0.62, 0.55, 0.33, 0.38]}]
        }
      ]
    }

Overlay kinds: ``numeric`` (solid curve from a snapshot or difference CSV),
``predicted`` (dotted, reads the u_predicted column of a steady_compare.csv
or the u column of a predicted.csv) and ``m-profile`` (dotted black).  File
paths are relative to the data root passed at render time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

OVERLAY_KINDS = ("numeric", "predicted", "m-profile")


class FigureSpecError(ValueError):
    """Malformed or inconsistent figure specification."""


@dataclass(frozen=True)
class Overlay:
    kind: str
    file: str
    color: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class Zoom:
    x: tuple[float, float]
    inset: tuple[float, float, float, float]


@dataclass(frozen=True)
class Panel:
    overlays: list[Overlay]
    title: str = ""
    zooms: list[Zoom] = field(default_factory=list)
    legend: bool = True


@dataclass(frozen=True)
class FigureSpec:
    name: str
    output: str
    panels: list[Panel]


def _parse_overlay(raw: dict, where: str) -> Overlay:
    kind = raw.get("kind")
    if kind not in OVERLAY_KINDS:
        raise FigureSpecError(
            f"{where}: overlay kind must be one of {OVERLAY_KINDS}, got {kind!r}")
    if not raw.get("file"):
        raise FigureSpecError(f"{where}: overlay needs a 'file'")
    return Overlay(kind=kind, file=raw["file"], color=raw.get("color"),
                   label=raw.get("label"))


def parse_spec(payload: dict) -> FigureSpec:
    name = payload.get("name", "figure")
    panels_raw = payload.get("panels")
    if not panels_raw:
        raise FigureSpecError(f"{name}: figure needs at least one panel")
    panels = []
    for i, praw in enumerate(panels_raw):
        overlays = [
            _parse_overlay(o, f"{name}.panels[{i}]")
            for o in praw.get("overlays", [])
        ]
        if not overlays:
            raise FigureSpecError(f"{name}.panels[{i}]: overlay list is empty")
        zooms = [Zoom(x=tuple(z["x"]), inset=tuple(z["inset"]))
                 for z in praw.get("zooms", [])]
        panels.append(Panel(overlays=overlays, title=praw.get("title", ""),
                            zooms=zooms, legend=praw.get("legend", True)))
    return FigureSpec(name=name, output=payload.get("output", f"{name}.png"),
                      panels=panels)


def load_spec(source: str | Path) -> FigureSpec:
    """Load a spec from a path, or by shipped name (e.g. "fig1")."""
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        return parse_spec(json.loads(path.read_text()))
    shipped = resources.files("plotkit").joinpath(f"figures/{source}.json")
    try:
        return parse_spec(json.loads(shipped.read_text()))
    except FileNotFoundError:
        raise FigureSpecError(f"no such figure spec: {source}")


def shipped_figures() -> list[str]:
    root = resources.files("plotkit").joinpath("figures")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
