"""Deterministic rendering of figure specs to PNG files.

Rendering is a pure function of the referenced CSV files: rcParams are pinned,
fonts and sizes are fixed, and no timestamps enter the output, so re-rendering
the same inputs with the same toolchain reproduces the bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .figspec import FigureSpec, Overlay, Panel

_RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "plotkit",
}

_PANEL_SIZE = (5.2, 3.9)


class MissingInputError(FileNotFoundError):
    """One or more referenced CSV inputs are absent."""

    def __init__(self, missing: list[str]):
        super().__init__("missing input files: " + ", ".join(missing))
        self.missing = missing


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def _overlay_xy(path: Path, overlay: Overlay) -> tuple[np.ndarray, np.ndarray]:
    cols = _read_csv(path)
    x = cols["x"]
    if overlay.kind == "predicted":
        y = cols.get("u_predicted", cols.get("u"))
    elif overlay.kind == "m-profile":
        y = cols.get("m", cols.get("u"))
    else:
        y = cols.get("u", cols.get("diff"))
    if y is None:
        raise ValueError(f"{path}: no usable value column for {overlay.kind}")
    return x, y


def _draw(ax, x, y, overlay: Overlay) -> None:
    if overlay.kind == "m-profile":
        ax.plot(x, y, linestyle=":", color="black",
                label=overlay.label or "m")
    elif overlay.kind == "predicted":
        ax.plot(x, y, linestyle=":", color=overlay.color or "red",
                label=overlay.label or "predicted")
    else:
        ax.plot(x, y, linestyle="-", color=overlay.color,
                label=overlay.label)


def _render_panel(ax, panel: Panel, data_root: Path) -> None:
    series = []
    for overlay in panel.overlays:
        x, y = _overlay_xy(data_root / overlay.file, overlay)
        if series and not np.array_equal(series[0][0], x):
            raise ValueError(
                f"{overlay.file}: grid differs from the panel's first input")
        series.append((x, y, overlay))
        _draw(ax, x, y, overlay)
    if panel.title:
        ax.set_title(panel.title)
    ax.set_xlabel("x")
    if panel.legend and any(o.label or o.kind != "numeric"
                            for _, _, o in series):
        ax.legend(loc="upper right")
    for zoom in panel.zooms:
        inset = ax.inset_axes(list(zoom.inset))
        lo, hi = zoom.x
        ymin, ymax = np.inf, -np.inf
        for x, y, overlay in series:
            mask = (x >= lo) & (x <= hi)
            if not mask.any():
                continue
            _draw(inset, x[mask], y[mask], overlay)
            ymin = min(ymin, float(y[mask].min()))
            ymax = max(ymax, float(y[mask].max()))
        if np.isfinite(ymin) and ymax > ymin:
            pad = 0.08 * (ymax - ymin)
            inset.set_ylim(ymin - pad, ymax + pad)
        inset.set_xlim(lo, hi)
        inset.legend_ = None
        inset.tick_params(labelsize=6)
        ax.indicate_inset_zoom(inset, edgecolor="gray")


def render(spec: FigureSpec, data_root: str | Path,
           out_dir: str | Path) -> Path:
    """Render one figure spec; returns the written image path."""
    data_root = Path(data_root)
    missing = sorted({o.file for p in spec.panels for o in p.overlays
                      if not (data_root / o.file).exists()})
    if missing:
        raise MissingInputError(missing)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / spec.output
    n = len(spec.panels)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(
            1, n, figsize=(_PANEL_SIZE[0] * n, _PANEL_SIZE[1]), squeeze=False)
        try:
            for ax, panel in zip(axes[0], spec.panels):
                _render_panel(ax, panel, data_root)
            fig.tight_layout()
            fig.savefig(out_path)
        finally:
            plt.close(fig)
    return out_path
