import json
from pathlib import Path

import pytest

from plotkit.figspec import FigureSpecError, load_spec, parse_spec, shipped_figures
from plotkit.render import MissingInputError, render

DATA_ROOT = Path(__file__).parent / "data" / "runs"

ALL_FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")


def test_shipped_figures_list():
    assert shipped_figures() == sorted(ALL_FIGURES)


@pytest.mark.parametrize("name", ALL_FIGURES)
def test_render_shipped_figures(name, tmp_path):
    spec = load_spec(name)
    out = render(spec, DATA_ROOT, tmp_path)
    assert out.exists()
    assert out.suffix == ".png"
    assert out.stat().st_size > 10_000


def test_render_byte_identical(tmp_path):
    """Acceptance: two invocations produce the same bytes for every figure."""
    results = {}
    for name in ALL_FIGURES:
        spec = load_spec(name)
        first = render(spec, DATA_ROOT, tmp_path / "a").read_bytes()
        second = render(spec, DATA_ROOT, tmp_path / "b").read_bytes()
        results[name] = first == second
        print(f"[acceptance] render {name}: "
              f"{'PASS' if results[name] else 'FAIL'} (byte-identical)",
              flush=True)
    assert all(results.values()), results


def test_empty_overlays_rejected():
    with pytest.raises(FigureSpecError):
        parse_spec({"name": "x", "panels": [{"overlays": []}]})


def test_unknown_overlay_kind_rejected():
    with pytest.raises(FigureSpecError):
        parse_spec({"name": "x", "panels": [
            {"overlays": [{"kind": "wavelet", "file": "a.csv"}]}]})


def test_missing_inputs_reported_per_file(tmp_path):
    spec = parse_spec({
        "name": "x", "output": "x.png",
        "panels": [{"overlays": [
            {"kind": "numeric", "file": "nope/one.csv"},
            {"kind": "m-profile", "file": "nope/two.csv"},
        ]}],
    })
    with pytest.raises(MissingInputError) as err:
        render(spec, tmp_path, tmp_path)
    assert "nope/one.csv" in str(err.value)
    assert "nope/two.csv" in str(err.value)


def test_grid_mismatch_rejected(tmp_path):
    (tmp_path / "r").mkdir()
    (tmp_path / "r" / "a.csv").write_text("x,u\n0,1\n1,2\n")
    (tmp_path / "r" / "b.csv").write_text("x,u\n0,1\n2,2\n")
    spec = parse_spec({
        "name": "x", "output": "x.png",
        "panels": [{"overlays": [
            {"kind": "numeric", "file": "r/a.csv"},
            {"kind": "numeric", "file": "r/b.csv"},
        ]}],
    })
    with pytest.raises(ValueError, match="grid"):
        render(spec, tmp_path, tmp_path)


def test_spec_from_path(tmp_path):
    payload = {"name": "mini", "output": "mini.png", "panels": [
        {"overlays": [{"kind": "numeric", "file": "r/a.csv",
                       "color": "blue", "label": "u"}]}]}
    spec_path = tmp_path / "mini.json"
    spec_path.write_text(json.dumps(payload))
    (tmp_path / "r").mkdir()
    (tmp_path / "r" / "a.csv").write_text("x,u\n0,1\n1,2\n2,1\n")
    spec = load_spec(spec_path)
    out = render(spec, tmp_path, tmp_path / "out")
    assert out.name == "mini.png"
    assert out.exists()
