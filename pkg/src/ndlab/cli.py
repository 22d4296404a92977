"""Config-driven experiment runner.

Subcommands: simulate, simulate-local, steady, predict, limit-study, moments,
strat-check, tails, preset.  Each run writes CSV snapshots plus a run.json
echo into <output>/<run_id>/ and prints a one-line summary.  Exit codes:
0 success, 2 validation/configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, local_solver, nonlocal_solver
from .config import (
    build_grid,
    build_law,
    build_model,
    build_time,
    build_u0,
    law_metadata,
    load_config,
)
from .errors import ConfigError, NdlabError, StabilityError
from .grid import Grid1D
from .jumpmodel import Variant, single_factor
from .kernels import kernel_from_name, moment
from .presets import load_preset, preset_table
from .profiles import profile_from_spec
from .runio import (
    mass_stats,
    snapshot_name,
    write_difference,
    write_json,
    write_profile,
    write_snapshot,
    write_steady_compare,
)

_KERNEL_COLORS = ("gaussian", "laplace", "quartic", "heavy_tail")


def _out_root(args, cfg: dict) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if "output" in cfg:
        return Path(cfg["output"])
    return Path(os.environ.get("NDL_OUT", "runs"))


def _reference_profile(model):
    if model.variant is Variant.SINGLE_FACTOR:
        return model.m_profile
    if model.variant is Variant.TWO_FACTOR:
        return model.nu_profile
    if model.variant is Variant.STRATONOVICH:
        return model.h_profile
    return None


def _model_echo(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _simulate_once(cfg: dict, run_dir: Path, model=None, run_id=None) -> dict:
    grid = build_grid(cfg)
    if model is None:
        model = build_model(cfg, grid)
    time = build_time(cfg)
    u0 = build_u0(cfg, grid)
    op = nonlocal_solver.assemble(model, grid)
    dt = time.dt if time.dt is not None else op.default_dt()
    if dt > op.dt_limit(time.scheme):
        raise StabilityError(
            f"dt={dt:g} fails the {time.scheme} preflight bound "
            f"{op.dt_limit(time.scheme):g}")
    traj = nonlocal_solver.evolve(op, u0, time.T, dt, time.scheme,
                                  snapshot_times=time.snapshots)
    for t, u in zip(traj.times, traj.states):
        write_snapshot(run_dir / snapshot_name(t), grid.nodes, u)
    ref = _reference_profile(model)
    if ref is not None:
        write_profile(run_dir / "profile.csv", grid.nodes,
                      np.asarray(ref.eval(grid.nodes), dtype=float))
    stats = mass_stats(traj)
    summary = {"run_id": run_id or cfg.get("run_id", run_dir.name),
               "mass": stats}
    mass = float(grid.h * u0.sum())
    prediction = analysis.predict_steady(model, grid, mass)
    if prediction is not None:
        write_steady_compare(run_dir / "steady_compare.csv", grid.nodes,
                             traj.final, prediction.profile)
        scale = float(np.abs(prediction.profile).max())
        summary["prediction_sup_err_rel"] = float(
            np.abs(traj.final - prediction.profile).max() / scale)
        summary["prediction_regime"] = prediction.regime.value
    write_json(run_dir / "run.json", {
        "command": "simulate",
        "run_id": summary["run_id"],
        "model": _model_echo(cfg.get("model", {})),
        "grid": {"R": grid.R, "M": grid.M, "h": grid.h},
        "time": {"T": time.T, "dt": dt, "scheme": time.scheme,
                 "snapshots": list(traj.times)},
        "mass": stats,
        "summary": {k: v for k, v in summary.items() if k != "mass"},
    })
    summary["dir"] = str(run_dir)
    summary["final"] = traj.final
    summary["grid"] = grid
    return summary


def cmd_simulate(args) -> dict:
    cfg = load_config(args.config)
    out = _out_root(args, cfg) / cfg.get("run_id", Path(args.config).stem)
    res = _simulate_once(cfg, out)
    res.pop("final"), res.pop("grid")
    return res


def _run_ladder(cfg: dict, out_root: Path) -> dict:
    run_id = cfg.get("run_id", "ladder")
    alphas = cfg.get("alphas")
    if not alphas:
        raise ConfigError("ladder preset needs an 'alphas' list")
    top = out_root / run_id
    entries = []
    for alpha in alphas:
        sub = dict(cfg)
        sub["model"] = dict(cfg["model"], alpha=float(alpha))
        res = _simulate_once(sub, top / f"alpha_{alpha:g}",
                             run_id=f"{run_id}/alpha_{alpha:g}")
        entries.append({"alpha": float(alpha),
                        "dir": f"alpha_{alpha:g}",
                        "mass_drift_rel": res["mass"]["drift_rel"],
                        "prediction_sup_err_rel":
                            res.get("prediction_sup_err_rel")})
    grid = build_grid(cfg)
    model_cfg = dict(cfg["model"], alpha=float(alphas[0]))
    ref = _reference_profile(build_model(dict(cfg, model=model_cfg), grid))
    if ref is not None:
        write_profile(top / "profile.csv", grid.nodes,
                      np.asarray(ref.eval(grid.nodes), dtype=float))
    payload = {"command": "ladder", "run_id": run_id, "alphas": list(alphas),
               "entries": entries}
    write_json(top / "ladder.json", payload)
    worst = max((e["prediction_sup_err_rel"] or 0.0) for e in entries)
    drift = max(e["mass_drift_rel"] for e in entries)
    return {"run_id": run_id, "dir": str(top), "worst_prediction_err": worst,
            "mass": {"drift_rel": drift}}


def _run_kernel_states(cfg: dict, out_root: Path) -> tuple[Path, dict, Grid1D]:
    run_id = cfg.get("run_id", "kernels")
    kernels = cfg.get("kernels", list(_KERNEL_COLORS))
    top = out_root / run_id
    grid = build_grid(cfg)
    states = {}
    drifts = {}
    for kname in kernels:
        sub = dict(cfg)
        sub["model"] = dict(cfg["model"], kernel=kname)
        res = _simulate_once(sub, top / kname, run_id=f"{run_id}/{kname}")
        states[kname] = res["final"]
        drifts[kname] = res["mass"]["drift_rel"]
    m_prof = profile_from_spec(cfg["model"]["m"]) \
        if cfg["model"].get("m") is not None else None
    if m_prof is not None:
        write_profile(top / "profile.csv", grid.nodes,
                      np.asarray(m_prof.eval(grid.nodes), dtype=float))
    return top, {"states": states, "drifts": drifts, "run_id": run_id}, grid


def _run_kernel_sweep(cfg: dict, out_root: Path) -> dict:
    top, data, grid = _run_kernel_states(cfg, out_root)
    index = analysis.tail_concentration_index(data["states"], grid, x0=0.0)
    payload = {"command": "kernel-sweep", "run_id": data["run_id"],
               "kernels": list(data["states"]),
               "concentration": index,
               "mass_drift_rel": data["drifts"]}
    write_json(top / "sweep.json", payload)
    return {"run_id": data["run_id"], "dir": str(top),
            "ordering": index["ordering"],
            "mass": {"drift_rel": max(data["drifts"].values())}}


def _run_kernel_diffs(cfg: dict, out_root: Path) -> dict:
    top, data, grid = _run_kernel_states(cfg, out_root)
    pairs = cfg.get("pairs") or [["heavy_tail", "quartic"], ["quartic", "laplace"]]
    counts = {}
    for hi, lo in pairs:
        diff = data["states"][hi] - data["states"][lo]
        name = f"{hi}_minus_{lo}"
        write_difference(top / f"{name}.csv", grid.nodes, diff)
        positive = grid.nodes > 0.0
        counts[name] = analysis.material_sign_changes(diff[positive])
    payload = {"command": "kernel-diffs", "run_id": data["run_id"],
               "pairs": [list(p) for p in pairs],
               "sign_changes_positive_axis": counts,
               "mass_drift_rel": data["drifts"]}
    write_json(top / "diffs.json", payload)
    return {"run_id": data["run_id"], "dir": str(top), "sign_changes": counts,
            "mass": {"drift_rel": max(data["drifts"].values())}}


def cmd_simulate_local(args) -> dict:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    model = build_model(cfg, grid) if "model" in cfg else None
    law = build_law(cfg, model)
    time = build_time(cfg, default_T=100.0)
    u0 = build_u0(cfg, grid)
    op = local_solver.assemble_local(law, grid)
    scheme = time.scheme if time.scheme else "euler"
    dt = time.dt if time.dt is not None else op.default_dt(scheme)
    if dt > op.dt_limit(scheme):
        raise StabilityError(
            f"dt={dt:g} fails the {scheme} preflight bound {op.dt_limit(scheme):g}")
    traj = local_solver.evolve_local(op, u0, time.T, dt, scheme,
                                     snapshot_times=time.snapshots)
    run_id = cfg.get("run_id", Path(args.config).stem)
    run_dir = _out_root(args, cfg) / run_id
    for t, u in zip(traj.times, traj.states):
        write_snapshot(run_dir / snapshot_name(t), grid.nodes, u)
    stats = mass_stats(traj)
    write_json(run_dir / "run.json", {
        "command": "simulate-local",
        "run_id": run_id,
        "law": law_metadata(law),
        "grid": {"R": grid.R, "M": grid.M, "h": grid.h},
        "time": {"T": time.T, "dt": dt, "scheme": scheme,
                 "snapshots": list(traj.times)},
        "mass": stats,
    })
    return {"run_id": run_id, "dir": str(run_dir), "mass": stats}


def cmd_steady(args) -> dict:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    model = build_model(cfg, grid)
    mass = float(cfg.get("mass", cfg.get("u0", {}).get("mass", 4.0)))
    op = nonlocal_solver.assemble(model, grid)
    u = nonlocal_solver.solve_steady(op, mass)
    run_id = cfg.get("run_id", Path(args.config).stem)
    run_dir = _out_root(args, cfg) / run_id
    write_snapshot(run_dir / "steady.csv", grid.nodes, u)
    summary = {"run_id": run_id, "dir": str(run_dir),
               "residual": float(np.abs(op.apply(u)).max())}
    prediction = analysis.predict_steady(model, grid, mass)
    if prediction is not None:
        write_steady_compare(run_dir / "steady_compare.csv", grid.nodes, u,
                             prediction.profile)
        summary["prediction_sup_err_rel"] = float(
            np.abs(u - prediction.profile).max()
            / np.abs(prediction.profile).max())
    write_json(run_dir / "run.json", {
        "command": "steady", "run_id": run_id,
        "model": _model_echo(cfg.get("model", {})),
        "grid": {"R": grid.R, "M": grid.M, "h": grid.h},
        "mass": {"target": mass},
        "summary": summary,
    })
    return summary


def cmd_predict(args) -> dict:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    model = build_model(cfg, grid)
    mass = float(cfg.get("mass", cfg.get("u0", {}).get("mass", 4.0)))
    prediction = analysis.predict_steady(model, grid, mass)
    if prediction is None:
        raise ConfigError(
            "no closed-form steady state for this model; use 'steady' instead")
    run_id = cfg.get("run_id", Path(args.config).stem)
    run_dir = _out_root(args, cfg) / run_id
    write_snapshot(run_dir / "predicted.csv", grid.nodes, prediction.profile)
    resid = analysis.um_rela_residual(model.m_profile, model.alpha,
                                      prediction.profile, grid)
    payload = {"command": "predict", "run_id": run_id,
               "regime": prediction.regime.value,
               "normalization": prediction.normalization,
               "integrable_on_line": prediction.integrable_on_line,
               "pairwise_residual": resid}
    write_json(run_dir / "run.json", payload)
    return dict(payload, dir=str(run_dir))


def cmd_limit_study(args) -> dict:
    cfg = load_config(args.config)
    epsilons = cfg.get("epsilons", [0.4, 0.2, 0.1, 0.05])
    if "grid" in cfg:
        grid = build_grid(cfg)
    else:
        R = float(cfg.get("R", 10.0))
        grid = Grid1D(R, int(np.ceil(16.0 * R / min(epsilons))))
    model = build_model(cfg, grid)
    law = build_law(cfg, model)
    T = float(cfg.get("T", 2.0))
    margin = cfg.get("margin")
    study = analysis.limit_study(model, law, grid, T, epsilons,
                                 margin=None if margin is None else float(margin),
                                 workers=int(cfg.get("workers", 1)))
    run_id = cfg.get("run_id", Path(args.config).stem)
    run_dir = _out_root(args, cfg) / run_id
    payload = {"command": "limit-study", "run_id": run_id,
               "epsilons": study.epsilons, "errors": study.errors,
               "order": study.estimated_order,
               "margin": study.interior_margin,
               "fit_residual": study.fit_residual,
               "law": law_metadata(law)}
    write_json(run_dir / "study.json", payload)
    return dict(payload, dir=str(run_dir))


def cmd_moments(args) -> dict:
    kernel = kernel_from_name(args.kernel)
    out = {
        "kernel": args.kernel,
        "params": kernel.params,
        "mass": moment(kernel, 0),
        "abs_first_moment": moment(kernel, 1, absolute=True),
        "second_moment": moment(kernel, 2),
    }
    if getattr(args, "out", None):
        write_json(Path(args.out) / f"moments_{args.kernel}.json", out)
    return out


def cmd_strat_check(args) -> dict:
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    h_prof = profile_from_spec(cfg.get("h", {"name": "constant", "value": 1.0}))
    kernel = kernel_from_name(cfg.get("kernel", "gaussian"), cfg.get("_base_dir"))
    T = float(cfg.get("T", 1.0))
    sigma = float(cfg.get("u0_sigma", 1.0))
    u0 = lambda x: np.exp(-0.5 * np.square(np.asarray(x) / sigma))
    levels = cfg.get("levels", [1, 2])
    discrepancies = []
    for mult in levels:
        g = Grid1D(grid.R, grid.M * int(mult))
        discrepancies.append(analysis.strat_equivalence(h_prof, kernel, g, u0, T))
    ratios = [discrepancies[i] / discrepancies[i + 1]
              for i in range(len(discrepancies) - 1)]
    run_id = cfg.get("run_id", Path(args.config).stem)
    run_dir = _out_root(args, cfg) / run_id
    payload = {"command": "strat-check", "run_id": run_id,
               "levels": [grid.M * int(m) for m in levels],
               "discrepancies": discrepancies, "refinement_ratios": ratios}
    write_json(run_dir / "strat.json", payload)
    return dict(payload, dir=str(run_dir))


def cmd_tails(args) -> dict:
    cfg = load_config(args.config)
    out_root = _out_root(args, cfg)
    sweep = _run_kernel_diffs(cfg, out_root)
    return sweep


def cmd_preset(args) -> dict:
    if args.list or not args.name:
        return {"presets": preset_table()}
    cfg = load_preset(args.name)
    out_root = _out_root(args, cfg)
    command = cfg.get("command", "simulate")
    if command == "simulate":
        res = _simulate_once(cfg, out_root / cfg["run_id"])
        res.pop("final", None), res.pop("grid", None)
        return res
    if command == "ladder":
        return _run_ladder(cfg, out_root)
    if command == "kernel-sweep":
        return _run_kernel_sweep(cfg, out_root)
    if command == "kernel-diffs":
        return _run_kernel_diffs(cfg, out_root)
    raise ConfigError(f"preset {args.name}: unknown command {command!r}")


def _summary_line(cmd: str, res: dict) -> str:
    bits = [cmd]
    if "run_id" in res:
        bits.append(str(res["run_id"]))
    if "kernel" in res:
        params = ", ".join(f"{k}={v:.4f}" for k, v in res.get("params", {}).items())
        bits.append(f"{res['kernel']}: mass {res['mass']:.9f}, "
                    f"|z| moment {res['abs_first_moment']:.9f}, "
                    f"z^2 moment {res['second_moment']:.9f}"
                    + (f" [{params}]" if params else ""))
        return " | ".join(bits)
    mass = res.get("mass") or {}
    if isinstance(mass, dict) and "drift_rel" in mass:
        bits.append(f"mass drift {mass['drift_rel']:.2e}")
    for key, label in (("prediction_sup_err_rel", "prediction sup-err"),
                       ("residual", "residual"),
                       ("order", "order"),
                       ("worst_prediction_err", "worst prediction err")):
        if res.get(key) is not None:
            bits.append(f"{label} {res[key]:.3g}")
    if "sign_changes" in res:
        bits.append(f"sign changes {res['sign_changes']}")
    if "refinement_ratios" in res:
        bits.append("discrepancies " +
                    ", ".join(f"{d:.3e}" for d in res["discrepancies"]))
        bits.append("ratios " +
                    ", ".join(f"{r:.2f}" for r in res["refinement_ratios"]))
    if "errors" in res and "epsilons" in res:
        bits.append("errors " + ", ".join(f"{e:.3e}" for e in res["errors"]))
    if "presets" in res:
        bits.append(", ".join(res["presets"]))
    if "dir" in res:
        bits.append(f"-> {res['dir']}")
    return " | ".join(bits)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndl",
        description="nonlocal heterogeneous diffusion laboratory")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the summary line")
    parser.add_argument("--json-summary", action="store_true",
                        help="print the summary as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--out", help="output root (default $NDL_OUT or ./runs)")
        return p

    for name, fn, help_text in (
            ("simulate", cmd_simulate, "integrate the nonlocal model"),
            ("simulate-local", cmd_simulate_local, "integrate a local q-law"),
            ("steady", cmd_steady, "direct stationary solve"),
            ("predict", cmd_predict, "closed-form steady profile"),
            ("limit-study", cmd_limit_study, "focusing-limit convergence study"),
            ("strat-check", cmd_strat_check, "metric change-of-variables check"),
            ("tails", cmd_tails, "kernel-tail comparison experiment")):
        p = add(name, fn, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")

    p = add("moments", cmd_moments, help="kernel constants and moments")
    p.add_argument("--kernel", required=True,
                   help="gaussian | laplace | quartic | heavy_tail | custom:<path>")

    p = add("preset", cmd_preset, help="run a shipped figure preset")
    p.add_argument("name", nargs="?", help="preset name (see --list)")
    p.add_argument("--list", action="store_true", help="list shipped presets")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        res = args.func(args)
    except (ConfigError, StabilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NdlabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    if args.json_summary:
        safe = {k: v for k, v in res.items() if not isinstance(v, np.ndarray)}
        print(json.dumps(safe, sort_keys=True, default=str))
    elif not args.quiet:
        print(_summary_line(args.command, res))
    return 0


if __name__ == "__main__":
    sys.exit(main())
