"""Batch front end.

Every command reads an optional YAML/JSON config file, applies command-line
overrides, and writes plot-ready CSV tables plus a JSON summary into the output
directory (``--out``, else ``$SEQTUNE_OUTPUT_DIR``, else ``./seqtune-out``).
Each CSV starts with ``#`` comment lines holding the resolved config and seed.

Exit codes: 0 success, 2 config error, 3 cap exhausted, 4 validation violation.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from .copulas import FrankCopula, GaussianCopula, estimate_nu
from .engine import CapExhausted, EngineConfig, make_copula_source, run_certification, run_tuning
from .estimation import BivariateSample
from .plant import PlantSource, calibrate_threshold, default_scenario, load_scenario
from .stopping import (
    StoppingBoundQuery, empirical_cdf, front_interval, inner_objective, median_crossing_rho,
    optimized_stopping_bound, rho_on_front,
)
from .success import p_hat_success, p_success_gaussian_oracle, p_success_mc_oracle

SCHEMA = "seqtune/1"
EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_VIOLATION = 0, 2, 3, 4
OUTPUT_ENV = "SEQTUNE_OUTPUT_DIR"
PILOT_STREAM = 0xFFFFFFFF  # seed-sequence key reserved for threshold calibration

TRAJECTORY_COLUMNS = ["n", "z", "x", "alpha_hat", "rho_hat", "alpha_lcb", "rho_lcb", "p"]
RUN_COLUMNS = ["rep", "tau", "certified", "selected_index", "selected_z", "p_final",
               "alpha_hat", "rho_hat", "test_x", "test_success"]

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "repetitions": 1,
    "workers": 1,
    "source": {"kind": "gaussian", "rho": 0.9792, "lam": 5.0, "scenario": None,
               "pilot": 20_000, "j_star": None},
    "alpha0": 0.07,
    "engine": {"delta": 0.025, "beta1": 0.0125, "beta2": 0.0125, "initial_n": 10,
               "max_n": 1_000_000},
    "sweep": {"mode": "n", "rho0": 0.9792, "n_grid": [500, 1000, 2000, 3000, 5000, 7500,
                                                     10_000, 15_000, 20_000, 30_000],
              "n": 29_156, "omega": 0.84, "rho0_grid": [0.7, 0.75, 0.78, 0.8, 0.82, 0.85, 0.9],
              "points": 201},
    "oracle": {"n": [10, 500, 2658], "alpha": [0.05, 0.3], "rho": [0.5, 0.9],
               "lam": [], "trials": 100_000, "tolerance": 1e-9, "nu_grid": 200},
    "nu": {"lam": [2.0, 5.0, 10.0], "rho": [], "grid": 500},
    "compare": {"scenarios": [None], "pairs": 10_000},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _read_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config: file not found: {path}")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            import yaml
            data = yaml.safe_load(text)
    except Exception as exc:  # parser-specific error types
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    src = data.get("source", {})
    if isinstance(src, dict) and src.get("scenario"):
        sc = Path(src["scenario"])
        if not sc.is_absolute():
            src["scenario"] = str(p.parent / sc)
    return data


def _parse_value(text: str):
    import yaml
    return yaml.safe_load(text)


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set: {dotted} does not name a mapping field")
    node[keys[-1]] = value


FLAG_PATHS = {
    "seed": "seed", "repetitions": "repetitions", "workers": "workers",
    "alpha0": "alpha0", "delta": "engine.delta", "beta1": "engine.beta1",
    "beta2": "engine.beta2", "initial_n": "engine.initial_n", "max_n": "engine.max_n",
    "source": "source.kind", "rho": "source.rho", "lam": "source.lam",
    "scenario": "source.scenario", "j_star": "source.j_star", "trials": "oracle.trials",
    "grid": "nu.grid", "rho0": "sweep.rho0", "mode": "sweep.mode",
}


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        cfg = _merge(cfg, _read_config(args.config))
    for flag, path in FLAG_PATHS.items():
        v = getattr(args, flag, None)
        if v is not None:
            _set_path(cfg, path, v)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        _set_path(cfg, k.strip(), _parse_value(v))
    cfg["command"] = args.command
    _validate(cfg)
    return cfg


def _require(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"config field '{field}': {msg}")


def _validate(cfg: dict) -> None:
    _require(isinstance(cfg["seed"], int) and cfg["seed"] >= 0, "seed", "non-negative integer")
    _require(isinstance(cfg["repetitions"], int) and cfg["repetitions"] >= 1, "repetitions",
             "integer >= 1")
    _require(isinstance(cfg["workers"], int) and cfg["workers"] >= 1, "workers", "integer >= 1")
    _require(0.0 < float(cfg["alpha0"]) <= 1.0, "alpha0", "must lie in (0, 1]")
    kind = cfg["source"]["kind"]
    _require(kind in ("gaussian", "frank", "plant"), "source.kind",
             "one of gaussian, frank, plant")
    if kind == "gaussian":
        _require(-1.0 < float(cfg["source"]["rho"]) < 1.0, "source.rho", "must lie in (-1, 1)")
    if kind == "frank":
        lam = float(cfg["source"]["lam"])
        _require(math.isfinite(lam) and lam != 0.0, "source.lam", "finite and nonzero")
    sc = cfg["source"].get("scenario")
    if sc is not None:
        _require(Path(sc).is_file(), "source.scenario", f"file not found: {sc}")
    for s in cfg["compare"]["scenarios"]:
        if s is not None and cfg["command"] == "scenario-compare":
            _require(Path(s).is_file(), "compare.scenarios", f"file not found: {s}")
    e = cfg["engine"]
    try:
        _engine_config(cfg, 0.0)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config field 'engine': {exc}") from exc
    _require(e["initial_n"] >= 2, "engine.initial_n", "integer >= 2")


def _engine_config(cfg: dict, j_star: float) -> EngineConfig:
    e = cfg["engine"]
    return EngineConfig(float(e["delta"]), float(e["beta1"]), float(e["beta2"]), float(j_star),
                        int(e["initial_n"]), int(e["max_n"]))


# ---------------------------------------------------------------- output

def output_dir(args: argparse.Namespace) -> Path:
    d = Path(args.out or os.environ.get(OUTPUT_ENV) or "seqtune-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, columns: list[str], rows, cfg: dict, note: str = "") -> None:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
    buf.write(f"# seed: {cfg['seed']}\n")
    buf.write(f"# columns: {', '.join(columns)}\n")
    if note:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: Path, payload: dict, cfg: dict) -> None:
    doc = {"schema": SCHEMA, "config": cfg, "seed": cfg["seed"], **payload}
    path.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------- sources

def rep_seed(seed: int, rep: int) -> np.random.SeedSequence:
    """Independent stream for repetition ``rep`` of a run seeded with ``seed``."""
    return np.random.SeedSequence([seed, rep])


def _scenario(path):
    return default_scenario() if path is None else load_scenario(path)


def plant_threshold(cfg: dict) -> float:
    src = cfg["source"]
    if src.get("j_star") is not None:
        return float(src["j_star"])
    return calibrate_threshold(_scenario(src.get("scenario")), float(cfg["alpha0"]),
                               int(src["pilot"]), rep_seed(cfg["seed"], PILOT_STREAM))


def build_source(cfg: dict, seed, j_star: float | None = None):
    """``(source, threshold)`` for the configured source kind."""
    src = cfg["source"]
    kind = src["kind"]
    if kind == "plant":
        return PlantSource(_scenario(src.get("scenario")), seed), j_star
    model = GaussianCopula(float(src["rho"])) if kind == "gaussian" else FrankCopula(
        float(src["lam"]))
    return make_copula_source(model, float(cfg["alpha0"]), seed)


def one_run(cfg: dict, rep: int, tune: bool, j_star: float | None = None):
    """Single engine run; returns ``(report, test_x, capped)``."""
    source, thr = build_source(cfg, rep_seed(cfg["seed"], rep), j_star)
    config = _engine_config(cfg, thr)
    try:
        if tune:
            report, theta = run_tuning(source, config)
        else:
            report, theta = run_certification(source, config), None
        capped = False
    except CapExhausted as exc:
        report, theta, capped = exc.report, exc.report.selected_theta, True
    test_x = math.nan
    if tune and theta is not None and hasattr(source, "test"):
        test_x = source.test(theta)
    return report, test_x, thr, capped


def _run_job(job):
    cfg, rep, tune, j_star = job
    return one_run(cfg, rep, tune, j_star)


# ---------------------------------------------------------------- commands

def cmd_engine(cfg: dict, out: Path, tune: bool) -> int:
    j_star = plant_threshold(cfg) if cfg["source"]["kind"] == "plant" else None
    reps = cfg["repetitions"]
    jobs = [(cfg, rep, tune, j_star) for rep in range(reps)]
    if cfg["workers"] > 1 and reps > 1:
        with ProcessPoolExecutor(cfg["workers"]) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]

    rows, any_cap = [], False
    for rep, (report, test_x, thr, capped) in enumerate(results):
        any_cap |= capped
        success = (test_x <= thr) if not math.isnan(test_x) else None
        rows.append([rep, report.tau, report.certified, report.selected_index, report.selected_z,
                     report.p_final, report.alpha_hat, report.rho_hat, test_x, success])

    if reps == 1:
        report, test_x, thr, capped = results[0]
        traj = [[s.n, s.z, s.x, s.alpha_hat, s.rho_hat, s.alpha_lcb, s.rho_lcb, s.p]
                for s in report.trajectory]
        write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, traj, cfg)
        payload = {"tau": report.tau, "certified": report.certified,
                   "selected_index": report.selected_index, "selected_z": report.selected_z,
                   "p_final": report.p_final, "alpha_hat": report.alpha_hat,
                   "rho_hat": report.rho_hat, "alpha_lcb": report.alpha_lcb,
                   "rho_lcb": report.rho_lcb, "threshold": thr,
                   "seeds": {"base": cfg["seed"], "repetition_keys": [[cfg["seed"], 0]]}}
        if tune:
            payload["test_x"] = test_x
            payload["test_success"] = None if math.isnan(test_x) else bool(test_x <= thr)
    else:
        write_csv(out / "runs.csv", RUN_COLUMNS, rows, cfg)
        taus = np.array([r[1] for r in rows])
        cert = [r for r in rows if r[2]]
        payload = {"repetitions": reps, "certified": len(cert), "cap_exhausted": reps - len(cert),
                   "tau_median": float(np.median(taus)), "tau_min": int(taus.min()),
                   "tau_max": int(taus.max()),
                   "seeds": {"base": cfg["seed"],
                             "repetition_keys": [[cfg["seed"], r] for r in range(reps)]}}
        tested = [r[9] for r in rows if r[9] is not None]
        if tune and tested:
            payload["test_success_rate"] = float(np.mean(tested))
            payload["tests"] = len(tested)
        if results[0][2] is not None:
            payload["threshold"] = results[0][2]
    write_json(out / "summary.json", payload, cfg)
    return EXIT_CAP if any_cap else EXIT_OK


def _query(cfg: dict, n: int, rho0: float | None = None) -> StoppingBoundQuery:
    e = cfg["engine"]
    return StoppingBoundQuery(int(n), float(cfg["alpha0"]),
                              float(cfg["sweep"]["rho0"] if rho0 is None else rho0),
                              float(e["delta"]), float(e["beta1"]), float(e["beta2"]))


def cmd_bound_sweep(cfg: dict, out: Path) -> int:
    sw = cfg["sweep"]
    mode = sw["mode"]
    if mode == "n":
        rows = []
        for n in sw["n_grid"]:
            b = optimized_stopping_bound(_query(cfg, n))
            rows.append([n, b.value if b.informative else None, b.informative, b.omega,
                         b.alpha_star, b.rho_star, b.reason])
        write_csv(out / "bound_sweep.csv",
                  ["n", "bound", "informative", "omega", "alpha_star", "rho_star", "reason"],
                  rows, cfg, "bound is empty where informative=0 (no valid bound at that n)")
        write_json(out / "summary.json", {"mode": mode, "rows": len(rows),
                                          "informative": sum(bool(r[2]) for r in rows)}, cfg)
    elif mode == "trace":
        q = _query(cfg, sw["n"])
        omega = float(sw["omega"])
        iv = front_interval(q, omega)
        rows = []
        if iv is not None:
            coeffs, lo, hi = iv
            f = inner_objective(q, coeffs)
            for a in np.linspace(lo, hi, int(sw["points"])):
                val = f(float(a))
                rows.append([float(a), rho_on_front(float(a), coeffs), val, 1.0 - val])
        write_csv(out / "front_trace.csv", ["alpha_star", "rho_star", "objective", "bound"],
                  rows, cfg)
        write_json(out / "summary.json", {"mode": mode, "omega": omega,
                                          "admissible": iv is not None, "rows": len(rows)}, cfg)
    elif mode == "rho0":
        n = int(sw["n"])
        rows = []
        for r0 in sw["rho0_grid"]:
            b = optimized_stopping_bound(_query(cfg, n, r0))
            rows.append([r0, b.value if b.informative else None, b.informative,
                         b.informative and b.value >= 0.5])
        e = cfg["engine"]
        cross = median_crossing_rho(n, float(cfg["alpha0"]), float(e["delta"]),
                                    float(e["beta1"]), float(e["beta2"]))
        write_csv(out / "crossing.csv", ["rho0", "bound", "informative", "reaches_median"],
                  rows, cfg)
        write_json(out / "summary.json", {"mode": mode, "n": n, "median_crossing_rho0": cross},
                   cfg)
    else:
        raise ConfigError("config field 'sweep.mode': one of n, trace, rho0")
    return EXIT_OK


def cmd_oracle_compare(cfg: dict, out: Path) -> int:
    oc = cfg["oracle"]
    trials, tol = int(oc["trials"]), float(oc["tolerance"])
    rows, violations, k = [], 0, 0
    for n in oc["n"]:
        for a in oc["alpha"]:
            for r in oc["rho"]:
                bound = p_hat_success(int(n), float(a), float(r)).p
                quad = p_success_gaussian_oracle(int(n), float(a), float(r))
                mc, se = p_success_mc_oracle(GaussianCopula(float(r)), int(n), 1, float(a),
                                             trials, rep_seed(cfg["seed"], k))
                k += 1
                bad = bound > quad + tol
                violations += bad
                rows.append(["gaussian", r, n, a, r, bound, quad, mc, se, 0.0, quad - mc, bad])
    for lam in oc["lam"]:
        model = FrankCopula(float(lam))
        nu = estimate_nu(model, int(oc["nu_grid"]))
        r = model.associated_rho
        for n in oc["n"]:
            for a in oc["alpha"]:
                bound = p_hat_success(int(n), float(a), r).p
                quad = p_success_gaussian_oracle(int(n), float(a), r)
                mc, se = p_success_mc_oracle(model, int(n), 1, float(a), trials,
                                             rep_seed(cfg["seed"], k))
                k += 1
                bad = quad - mc > nu + 3.0 * se
                violations += bad
                rows.append(["frank", lam, n, a, r, bound, quad, mc, se, nu, quad - mc, bad])
    write_csv(out / "oracle_compare.csv",
              ["family", "param", "n", "alpha", "rho", "bound", "quadrature_oracle",
               "mc_estimate", "mc_stderr", "nu", "oracle_minus_mc", "violation"], rows, cfg)
    write_json(out / "summary.json", {"rows": len(rows), "violations": int(violations)}, cfg)
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_nu_estimate(cfg: dict, out: Path) -> int:
    nc = cfg["nu"]
    grid = int(nc["grid"])
    models = [("frank", lam, FrankCopula(float(lam))) for lam in nc["lam"]]
    models += [("gaussian", r, GaussianCopula(float(r))) for r in nc["rho"]]
    rows = [[fam, p, m.kendall, m.associated_rho, grid, estimate_nu(m, grid)]
            for fam, p, m in models]
    write_csv(out / "nu.csv", ["family", "param", "kendall", "associated_rho", "grid", "nu"],
              rows, cfg, "nu is a lattice lower estimate of the supremum")
    write_json(out / "summary.json", {"rows": len(rows)}, cfg)
    return EXIT_OK


def cmd_scenario_compare(cfg: dict, out: Path) -> int:
    cc = cfg["compare"]
    pairs = int(cc["pairs"])
    rows = []
    for i, path in enumerate(cc["scenarios"]):
        sc = _scenario(path)
        src = PlantSource(sc, rep_seed(cfg["seed"], i))
        zx = src.pilot(pairs)
        s = BivariateSample(float(np.quantile(zx[:, 1], float(cfg["alpha0"]))))
        s.extend(zx)
        rows.append([path or "default", sc.states, sc.inputs, sc.horizon, pairs, s.kappa_hat(),
                     s.rho_hat(), s.x_star, float(np.median(zx[:, 0])),
                     float(np.median(zx[:, 1])), src.clamp_events])
    write_csv(out / "scenario_compare.csv",
              ["scenario", "states", "inputs", "horizon", "pairs", "kappa_hat", "rho_hat",
               "j_star", "median_z", "median_x", "clamp_events"], rows, cfg)
    write_json(out / "summary.json", {"rows": len(rows)}, cfg)
    return EXIT_OK


COMMANDS = {
    "tune": lambda cfg, out: cmd_engine(cfg, out, tune=True),
    "certify": lambda cfg, out: cmd_engine(cfg, out, tune=False),
    "bound-sweep": cmd_bound_sweep,
    "oracle-compare": cmd_oracle_compare,
    "nu-estimate": cmd_nu_estimate,
    "scenario-compare": cmd_scenario_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqtune", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("-c", "--config", help="YAML or JSON config file")
    p.add_argument("-o", "--out", help=f"output directory (default ${OUTPUT_ENV} or ./seqtune-out)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field by dotted path, e.g. engine.delta=0.05")
    p.add_argument("--seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--initial-n", dest="initial_n", type=int)
    p.add_argument("--max-n", dest="max_n", type=int)
    p.add_argument("--source", choices=["gaussian", "frank", "plant"])
    p.add_argument("--rho", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--scenario")
    p.add_argument("--j-star", dest="j_star", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--rho0", type=float)
    p.add_argument("--mode", choices=["n", "trace", "rho0"])
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = output_dir(args)
        code = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"seqtune: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_CAP:
        print("seqtune: sample cap reached without certification", file=sys.stderr)
    elif code == EXIT_VIOLATION:
        print("seqtune: validation violation (see violation column)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
