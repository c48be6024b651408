"""Command-line front end: ``gridsim <experiment> --config FILE [--set k=v] --seed N --out DIR``."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .artifacts import atomic_write, canonical, csv_text, dumps
from .codes import code_by_name, construct_codewords
from .config import (
    RunConfig,
    check_path,
    emit,
    parse_value,
    set_path,
    validate_config,
)
from .errors import (
    ConfigError,
    ConstructionQualityError,
    FitFailureError,
    MeasurementUnderflowError,
    NumericRangeError,
)
from .experiments import (
    characteristic_function_scan,
    isthmus_experiment,
    logical_lifetime,
    photon_loss_ensemble,
    photon_loss_signature,
    post_selection_analysis,
    square_grid,
    stabilize_from_vacuum,
)
from .fock import SpaceLayout
from .noise import NoiseModel
from .plotting import write_figures

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_NUMERIC = (NumericRangeError, FitFailureError, MeasurementUnderflowError, ConstructionQualityError, FloatingPointError)


def _noise(cfg: RunConfig) -> NoiseModel:
    n = cfg.noise
    return NoiseModel(n.kappa, n.kappa_phi, n.aux_T1, n.aux_T2, dict(n.gate_durations))


def _code(cfg: RunConfig):
    return code_by_name(cfg.code.name, cfg.code.delta)


# --- experiment runners: each returns (result dict, {csv name: text}) ---------------


def run_prepare(cfg: RunConfig):
    from .circuits import encode_logical

    code = _code(cfg)
    osc = SpaceLayout.oscillators(*cfg.dims, aux=False)
    cw = construct_codewords(code, osc)
    p = cfg.prepare
    res = encode_logical(
        cw, p.state, p.depth, SpaceLayout.oscillators(*cfg.dims), optimizer_budget=p.budget,
        f_target=p.f_target, seed=cfg.seed, restarts=p.restarts,
    )
    out = {
        "state": p.state,
        "fidelity": res.fidelity,
        "converged": res.converged,
        "evaluations": res.evaluations,
        "params": res.params,
        "circuit": res.circuit.to_dict(),
    }
    rows = [(i, v) for i, v in enumerate(res.params)]
    return out, {"params.csv": csv_text(["index", "value"], rows)}


def run_stabilize(cfg: RunConfig):
    res = stabilize_from_vacuum(_code(cfg), cfg.stabilize.rounds, _noise(cfg), cfg.dims)
    d = res.to_dict()
    labels = sorted(d["stabilizer_expectation"])
    rows = [
        [r, lab, p] + [d["stabilizer_expectation"][k][i] for k in labels]
        for i, (r, lab, p) in enumerate(zip(d["rounds"], d["round_labels"], d["p_one"]))
    ]
    return d, {"stabilize.csv": csv_text(["round", "measured", "p_one"] + labels, rows)}


def run_lifetime(cfg: RunConfig):
    code, noise, lt = _code(cfg), _noise(cfg), cfg.lifetime
    kw = dict(rounds=lt.rounds, shots=lt.shots, seed=cfg.seed, dims=cfg.dims, pauli=lt.pauli, fit_start=lt.fit_start)
    qec = logical_lifetime(code, noise, qec=True, **kw)
    out = {"qec": qec.to_dict(), "control": None}
    header, cols = ["round", "time", "qec"], [qec.series]
    if lt.control:
        idle = logical_lifetime(code, noise, qec=False, **kw)
        out["control"] = idle.to_dict()
        header.append("idle")
        cols.append(idle.series)
    rows = [[i + 1, t] + [c[i] for c in cols] for i, t in enumerate(qec.times)]
    return out, {"lifetime.csv": csv_text(header, rows)}


def _signature_csv(base, inj, name):
    rows = [[r, b, i] for r, (b, i) in enumerate(zip(base.frequencies, inj.frequencies))]
    return {name: csv_text(["round", "baseline_freq", "injected_freq"], rows)}


def run_isthmus(cfg: RunConfig):
    it = cfg.isthmus
    base, inj = isthmus_experiment(
        _code(cfg), _noise(cfg), it.injection_round, it.shots, cfg.seed, cfg.dims, it.window, it.fraction
    )
    out = {"baseline": base.to_dict(), "injected": inj.to_dict()}
    return out, _signature_csv(base, inj, "isthmus.csv")


def run_lossprobe(cfg: RunConfig):
    lp = cfg.lossprobe
    code, noise = _code(cfg), _noise(cfg)
    base, inj = photon_loss_signature(
        code, lp.shots, cfg.seed, cfg.dims, lp.loss_round, lp.window, lp.recovery_rounds, lp.state, noise
    )
    ens = photon_loss_ensemble(
        code, lp.ensemble_kappa_t_round, lp.loss_round + lp.recovery_rounds, lp.ensemble_shots, cfg.seed,
        cfg.dims, lp.state,
    )
    ps = [
        post_selection_analysis(ens.outcomes, ens.fidelities, "erasure"),
        post_selection_analysis(ens.outcomes, ens.fidelities, "window", lp.ps_window, lp.ps_threshold),
    ]
    out = {
        "baseline": base.to_dict(),
        "injected": inj.to_dict(),
        "elevation": inj.extra["p_one_within_window"] - base.extra["p_one_within_window"],
        "recovered_fidelity": 1.0 - inj.flip_probability,
        "ensemble": ens.to_dict(),
        "post_selection": [r.to_dict() for r in ps],
    }
    csvs = _signature_csv(base, inj, "lossprobe.csv")
    csvs["post_selection.csv"] = csv_text(
        ["strategy", "retained_fraction", "conditional_fidelity", "unconditional_fidelity", "degenerate"],
        [[r.strategy, r.retained_fraction, r.conditional_fidelity, r.unconditional_fidelity, r.degenerate] for r in ps],
    )
    return out, csvs


def run_charfunc(cfg: RunConfig):
    cf = cfg.charfunc
    code = _code(cfg)
    if code.mode_count != 1:
        raise ConfigError("characteristic-function scans need a single-mode code", "code.name")
    cw = construct_codewords(code, SpaceLayout.oscillators(*cfg.dims, aux=False))
    res = characteristic_function_scan(cw.logical_state(cf.state), square_grid(cf.extent, cf.points))
    d = res.to_dict()
    d["state"] = cf.state
    rows = [
        [b.real, b.imag, v.real, v.imag, abs(v), int(u)]
        for b, v, u in zip(res.grid.reshape(-1), res.values.reshape(-1), res.unsafe.reshape(-1))
    ]
    return d, {"charfunc.csv": csv_text(["beta_re", "beta_im", "re", "im", "abs", "unsafe"], rows)}


RUNNERS = {
    "prepare": run_prepare,
    "stabilize": run_stabilize,
    "lifetime": run_lifetime,
    "isthmus": run_isthmus,
    "lossprobe": run_lossprobe,
    "charfunc": run_charfunc,
}

_SUMMARY = {
    "prepare": lambda r: {"fidelity": r["fidelity"], "converged": r["converged"]},
    "stabilize": lambda r: {f"final_{k}": v[-1] for k, v in r["stabilizer_expectation"].items()},
    "lifetime": lambda r: {"T_L": r["qec"]["T_L"], "gain": r["qec"]["gain"]},
    "isthmus": lambda r: {
        "flip_baseline": r["baseline"]["flip_probability"],
        "flip_injected": r["injected"]["flip_probability"],
        "detection_statistic": r["injected"]["detection_statistic"],
    },
    "lossprobe": lambda r: {"elevation": r["elevation"], "recovered_fidelity": r["recovered_fidelity"]},
    "charfunc": lambda r: {"points": len(r["re"]) * len(r["re"][0])},
}


def _document(cfg: RunConfig, result: dict) -> dict:
    return {"experiment": cfg.experiment, "config": emit(cfg, include_output=False), "result": result}


def _write_run(cfg: RunConfig, out_dir: Path, result: dict, csvs: dict) -> dict:
    doc = canonical(_document(cfg, result))
    atomic_write(out_dir / "result.json", dumps(doc))
    for name, text in csvs.items():
        atomic_write(out_dir / name, text)
    write_figures(doc, out_dir)
    return doc


def run_experiment(cfg: RunConfig, out_dir: Path, raw: dict | None = None) -> dict:
    """Run a resolved config and write its files into ``out_dir``."""
    if cfg.experiment != "sweep":
        result, csvs = RUNNERS[cfg.experiment](cfg)
        return _write_run(cfg, out_dir, result, csvs)
    sw = cfg.sweep
    check_path(sw.parameter)
    base = dict(raw or emit(cfg))
    base.pop("sweep", None)
    base["experiment"] = sw.experiment
    points, rows, summary_keys = [], [], None
    for i, value in enumerate(sw.values):
        sub = validate_config(set_path(base, sw.parameter, value))
        doc = run_experiment(sub, out_dir / f"point_{i:03d}")
        summ = _SUMMARY[sw.experiment](doc["result"])
        summary_keys = summary_keys or sorted(summ)
        points.append({"index": i, "value": value, "config": doc["config"], "summary": summ})
        rows.append([i, json.dumps(canonical(value))] + [summ.get(k) for k in summary_keys])
    result = {"parameter": sw.parameter, "experiment": sw.experiment, "points": points}
    csvs = {"sweep.csv": csv_text(["index", sw.parameter] + (summary_keys or []), rows)}
    return _write_run(cfg, out_dir, result, csvs)


# --- argument handling ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridsim", description="Grid-code oscillator simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in [*RUNNERS, "sweep"]:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config path (repeatable)")
        p.add_argument("--seed", type=int, help="RNG seed (required here or in the config)")
        p.add_argument("--out", help="output directory")
    rp = sub.add_parser("replot", help="regenerate figures from an existing result.json")
    rp.add_argument("path", help="result.json or the directory holding it")
    return ap


def _load_raw(args) -> dict:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "--config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "--config") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", "--config")
    if raw.get("experiment", args.command) != args.command:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {args.command!r}", "experiment")
    raw["experiment"] = args.command
    for item in args.overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not KEY=VALUE", key)
        check_path(key)
        raw = set_path(raw, key, parse_value(val))
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output"] = args.out
    return raw


def _replot(path: str) -> int:
    p = Path(path)
    if p.is_dir():
        p = p / "result.json"
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read {p}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in write_figures(doc, p.parent):
        print(f)
    if doc.get("experiment") == "sweep":
        for pt in doc["result"]["points"]:
            sub = p.parent / f"point_{pt['index']:03d}"
            if (sub / "result.json").exists():
                _replot(str(sub))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "replot":
        return _replot(args.path)
    try:
        raw = _load_raw(args)
        cfg = validate_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg.output)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            run_experiment(cfg, out_dir, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # range checks raised deep inside the engine are configuration problems
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out_dir / "result.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
