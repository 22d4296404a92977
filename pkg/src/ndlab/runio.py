"""CSV/JSON artifact formats shared by the CLI and downstream plotting tools.

Snapshots are two-column CSVs ("x,u"), written with %.17g so identical runs
produce byte-identical files.  Each run directory carries a run.json with the
configuration echo and mass-conservation statistics.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_FMT = "%.17g"


def fmt_time(t: float) -> str:
    return f"{t:g}"


def snapshot_name(t: float) -> str:
    return f"t{fmt_time(t)}.csv"


def _write_columns(path: Path, header: str, columns) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack(columns)
    rows = "\n".join(",".join(_FMT % v for v in row) for row in data)
    path.write_text(header + "\n" + rows + "\n")


def write_snapshot(path: Path, x: np.ndarray, u: np.ndarray) -> None:
    _write_columns(Path(path), "x,u", (x, u))


def write_profile(path: Path, x: np.ndarray, m: np.ndarray) -> None:
    _write_columns(Path(path), "x,m", (x, m))


def write_steady_compare(path: Path, x, u_numeric, u_predicted) -> None:
    err = np.abs(np.asarray(u_numeric) - np.asarray(u_predicted))
    _write_columns(Path(path), "x,u_numeric,u_predicted,abs_err",
                   (x, u_numeric, u_predicted, err))


def write_difference(path: Path, x, diff) -> None:
    _write_columns(Path(path), "x,diff", (x, diff))


def read_columns(path: Path) -> dict[str, np.ndarray]:
    """Read any of the column CSVs above into {column name: array}."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def mass_stats(trajectory) -> dict:
    initial = trajectory.mass_history[0]
    final = trajectory.mass_history[-1]
    scale = max(abs(initial), 1e-300)
    return {
        "initial": initial,
        "final": final,
        "min": trajectory.mass_min,
        "max": trajectory.mass_max,
        "drift_rel": max(trajectory.mass_max - initial,
                         initial - trajectory.mass_min) / scale,
    }
