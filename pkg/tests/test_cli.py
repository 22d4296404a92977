import json

import numpy as np
import pytest

from ndlab.cli import main
from ndlab.presets import load_preset, preset_table
from ndlab.runio import read_columns

TINY = {
    "run_id": "tiny",
    "model": {"variant": "single_factor", "kernel": "gaussian", "alpha": 0.0,
              "m": {"name": "rational_bump"}},
    "grid": {"R": 10.0, "M": 81},
    "time": {"T": 20.0, "scheme": "rk4", "snapshots": [0.0, 20.0]},
    "u0": {"kind": "constant", "mass": 4.0},
}


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_simulate_writes_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "runs")]) == 0
    run_dir = tmp_path / "runs" / "tiny"
    assert (run_dir / "t0.csv").exists()
    assert (run_dir / "t20.csv").exists()
    assert (run_dir / "profile.csv").exists()
    assert (run_dir / "steady_compare.csv").exists()
    meta = json.loads((run_dir / "run.json").read_text())
    assert meta["grid"]["M"] == 81
    assert meta["mass"]["drift_rel"] <= 1e-12
    cols = read_columns(run_dir / "t20.csv")
    assert set(cols) == {"x", "u"}
    assert len(cols["x"]) == 81
    out = capsys.readouterr().out
    assert "mass drift" in out


def test_simulate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, TINY)
    assert main(["--quiet", "simulate", "--config", cfg,
                 "--out", str(tmp_path / "a")]) == 0
    assert main(["--quiet", "simulate", "--config", cfg,
                 "--out", str(tmp_path / "b")]) == 0
    for name in ("t20.csv", "run.json", "steady_compare.csv"):
        assert (tmp_path / "a" / "tiny" / name).read_bytes() == \
            (tmp_path / "b" / "tiny" / name).read_bytes()


def test_invalid_json_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"run_id": \n "x", }')
    assert main(["simulate", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_missing_field_is_validation_error(tmp_path, capsys):
    cfg = dict(TINY)
    cfg["model"] = {"variant": "single_factor", "kernel": "gaussian"}
    assert main(["simulate", "--config", write_cfg(tmp_path, cfg)]) == 2
    assert "model" in capsys.readouterr().err


def test_unstable_dt_rejected(tmp_path, capsys):
    cfg = dict(TINY, time={"T": 10.0, "dt": 100.0, "scheme": "euler"})
    assert main(["simulate", "--config", write_cfg(tmp_path, cfg),
                 "--out", str(tmp_path / "runs")]) == 2
    assert "bound" in capsys.readouterr().err


def test_out_root_env_override(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, TINY)
    monkeypatch.setenv("NDL_OUT", str(tmp_path / "envruns"))
    monkeypatch.chdir(tmp_path)
    assert main(["--quiet", "simulate", "--config", cfg]) == 0
    assert (tmp_path / "envruns" / "tiny" / "t20.csv").exists()


def test_json_summary(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    assert main(["--json-summary", "simulate", "--config", cfg,
                 "--out", str(tmp_path / "runs")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["run_id"] == "tiny"
    assert payload["prediction_sup_err_rel"] >= 0.0


def test_moments_command(capsys):
    assert main(["moments", "--kernel", "laplace"]) == 0
    out = capsys.readouterr().out
    assert "laplace" in out and "1.000000000" in out


def test_preset_table_and_protocol_values():
    names = preset_table()
    assert names == sorted(["fig1-left", "fig1-right", "fig2-left", "fig2-right",
                            "fig3-left", "fig3-right", "fig4", "fig5", "fig6",
                            "fig7", "fig8"])
    fig4 = load_preset("fig4")
    assert fig4["model"]["m"]["a"] == pytest.approx(np.log(2.0) / 10.0)
    assert fig4["alphas"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    fig5 = load_preset("fig5")
    assert fig5["model"]["m"]["a"] == pytest.approx(np.log(100.0) / 100.0)
    fig7 = load_preset("fig7")
    assert fig7["time"]["T"] == 10000.0
    assert fig7["kernels"] == ["gaussian", "laplace", "quartic", "heavy_tail"]
    for name in names:
        cfg = load_preset(name)
        assert cfg["u0"]["mass"] == 4.0
        assert cfg["grid"]["R"] == 10.0


def test_preset_list_flag(capsys):
    assert main(["preset", "--list"]) == 0
    assert "fig4" in capsys.readouterr().out


def test_unknown_preset(capsys):
    assert main(["preset", "nope"]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_predict_without_closed_form(tmp_path, capsys):
    cfg = dict(TINY)
    cfg["model"] = dict(cfg["model"], alpha=0.25, m={"name": "two_patch"})
    assert main(["predict", "--config", write_cfg(tmp_path, cfg),
                 "--out", str(tmp_path / "runs")]) == 2
    assert "closed-form" in capsys.readouterr().err


def test_predict_and_steady(tmp_path):
    cfg = write_cfg(tmp_path, TINY)
    out = str(tmp_path / "runs")
    assert main(["--quiet", "predict", "--config", cfg, "--out", out]) == 0
    assert main(["--quiet", "steady", "--config", cfg, "--out", out]) == 0
    pred = read_columns(tmp_path / "runs" / "tiny" / "predicted.csv")
    comp = read_columns(tmp_path / "runs" / "tiny" / "steady_compare.csv")
    np.testing.assert_allclose(comp["u_numeric"], pred["u"], rtol=1e-7)


def test_simulate_local(tmp_path):
    cfg = dict(TINY)
    cfg["law"] = {"q": 1.0, "D": {"name": "constant", "value": 1.0}}
    cfg["time"] = {"T": 1.0, "scheme": "euler"}
    del cfg["model"]
    assert main(["--quiet", "simulate-local", "--config",
                 write_cfg(tmp_path, cfg), "--out", str(tmp_path / "runs")]) == 0
    meta = json.loads((tmp_path / "runs" / "tiny" / "run.json").read_text())
    assert meta["law"]["q"] == 1.0
    assert meta["mass"]["drift_rel"] <= 1e-12
