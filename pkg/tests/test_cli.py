import csv
import io
import json

import pytest

from seqtune.cli import EXIT_CAP, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main


def read_csv(path):
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in lines if not l.startswith("#")))))
    return comments, rows


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "-o", str(out)])
    return code, out


def test_tune_single_run(tmp_path):
    code, out = run(tmp_path, "a", "tune", "--seed", "3")
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema"] == "seqtune/1" and summary["seed"] == 3
    assert summary["certified"] and 1000 <= summary["tau"] <= 30_000
    assert summary["p_final"] >= 0.975
    assert summary["config"]["engine"]["delta"] == 0.025
    comments, rows = read_csv(out / "trajectory.csv")
    assert any(c.startswith("# config: ") for c in comments)
    assert list(rows[0]) == ["n", "z", "x", "alpha_hat", "rho_hat", "alpha_lcb", "rho_lcb", "p"]
    assert int(rows[-1]["n"]) == summary["tau"]


def test_identical_runs_are_byte_identical(tmp_path):
    for cmd in (["tune", "--seed", "5"], ["certify", "--source", "frank", "--lam", "20",
                                          "--alpha0", "0.2", "--seed", "2"]):
        _, a = run(tmp_path, "a", *cmd)
        _, b = run(tmp_path, "b", *cmd)
        for f in sorted(p.name for p in a.iterdir()):
            assert (a / f).read_bytes() == (b / f).read_bytes()


def test_repetitions_table(tmp_path):
    code, out = run(tmp_path, "r", "tune", "--repetitions", "3", "--seed", "1")
    assert code == EXIT_OK
    _, rows = read_csv(out / "runs.csv")
    assert [r["rep"] for r in rows] == ["0", "1", "2"]
    assert len({r["tau"] for r in rows}) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["repetitions"] == 3 and summary["tests"] == 3
    assert summary["seeds"]["repetition_keys"] == [[1, 0], [1, 1], [1, 2]]


def test_worker_pool_matches_sequential(tmp_path):
    _, a = run(tmp_path, "a", "tune", "--repetitions", "2", "--seed", "4")
    _, b = run(tmp_path, "b", "tune", "--repetitions", "2", "--seed", "4", "--workers", "2")
    assert read_csv(a / "runs.csv")[1] == read_csv(b / "runs.csv")[1]


def test_cap_exhausted_exit(tmp_path):
    code, out = run(tmp_path, "c", "certify", "--rho", "0.0", "--max-n", "500")
    assert code == EXIT_CAP
    assert json.loads((out / "summary.json").read_text())["certified"] is False


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("seed: 9\nsource: {kind: gaussian, rho: 0.95}\nengine: {delta: 0.05}\n")
    code, out = run(tmp_path, "f", "certify", "-c", str(cfg), "--set", "engine.beta1=0.02")
    assert code == EXIT_OK
    c = json.loads((out / "summary.json").read_text())["config"]
    assert c["seed"] == 9 and c["source"]["rho"] == 0.95
    assert c["engine"]["delta"] == 0.05 and c["engine"]["beta1"] == 0.02


@pytest.mark.parametrize("args", [
    ["tune", "--delta", "0.99"],
    ["tune", "--rho", "1.5"],
    ["tune", "-c", "/nonexistent.yaml"],
    ["tune", "--scenario", "/nonexistent.yaml", "--source", "plant"],
    ["tune", "--set", "novalue"],
    ["bound-sweep", "--set", "sweep.mode=bogus"],
])
def test_config_errors(tmp_path, args, capsys):
    code, _ = run(tmp_path, "e", *args)
    assert code == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("seqtune: ")


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SEQTUNE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["nu-estimate", "--grid", "100", "--set", "nu.lam=[5.0]"]) == EXIT_OK
    _, rows = read_csv(tmp_path / "env" / "nu.csv")
    assert float(rows[0]["nu"]) > 0


def test_bound_sweep_sentinel_and_monotone(tmp_path):
    code, out = run(tmp_path, "s", "bound-sweep")
    assert code == EXIT_OK
    _, rows = read_csv(out / "bound_sweep.csv")
    early = [r for r in rows if int(r["n"]) <= 2000]
    assert early and all(r["informative"] == "0" and r["bound"] == "" for r in early)
    vals = [float(r["bound"]) for r in rows if r["informative"] == "1"]
    assert len(vals) >= 5 and all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_bound_sweep_trace_and_crossing(tmp_path):
    code, out = run(tmp_path, "t", "bound-sweep", "--mode", "trace", "--alpha0", "0.1",
                    "--rho0", "0.8", "--delta", "0.1", "--beta1", "0.05", "--beta2", "0.05",
                    "--set", "sweep.n=7500")
    assert code == EXIT_OK
    _, rows = read_csv(out / "front_trace.csv")
    bounds = [float(r["bound"]) for r in rows]
    k = max(range(len(bounds)), key=bounds.__getitem__)
    # interior maximum along the front at this fixed omega
    assert 0 < k < len(bounds) - 1 and bounds[k] > 0.7
    code, out = run(tmp_path, "x", "bound-sweep", "--mode", "rho0")
    assert code == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert 0.78 <= s["median_crossing_rho0"] <= 0.82


def test_oracle_compare(tmp_path):
    code, out = run(tmp_path, "o", "oracle-compare", "--trials", "20000",
                    "--set", "oracle.lam=[5.0]", "--set", "oracle.n=[10, 500]",
                    "--set", "oracle.alpha=[0.3, 1.0]")
    assert code == EXIT_OK
    _, rows = read_csv(out / "oracle_compare.csv")
    assert all(r["violation"] == "0" for r in rows)
    ones = [r for r in rows if r["alpha"] == "1.0" and r["family"] == "gaussian"]
    assert ones and all(float(r["bound"]) > 1 - 1e-12 and float(r["quadrature_oracle"]) == 1.0
                        and float(r["mc_estimate"]) == 1.0 for r in ones)


def test_oracle_compare_flags_violation(tmp_path):
    code, out = run(tmp_path, "v", "oracle-compare", "--trials", "1000",
                    "--set", "oracle.n=[500]", "--set", "oracle.alpha=[0.1]",
                    "--set", "oracle.rho=[0.5]", "--set", "oracle.tolerance=-1.0")
    assert code == EXIT_VIOLATION
    _, rows = read_csv(out / "oracle_compare.csv")
    assert rows[0]["violation"] == "1"


def test_scenario_compare(tmp_path):
    import yaml
    sc = tmp_path / "plant.yaml"
    sc.write_text(yaml.safe_dump({
        "A": [[0.9, 0.2], [0.0, 0.8]], "B": [[0.0], [0.5]], "C": [[1.0, 0.0]],
        "reference": [[0.0] * 10 + [1.0] * 40], "x0": [1.5, -1.0]}))
    code, out = run(tmp_path, "p", "scenario-compare", "--set", "compare.pairs=500",
                    "--set", f"compare.scenarios=[null, {sc}]")
    assert code == EXIT_OK
    _, rows = read_csv(out / "scenario_compare.csv")
    assert [r["states"] for r in rows] == ["4", "2"]
    assert all(float(r["kappa_hat"]) > 0 for r in rows)


def test_plant_tuning(tmp_path):
    code, out = run(tmp_path, "pl", "tune", "--source", "plant", "--alpha0", "0.2",
                    "--set", "source.pilot=2000")
    assert code == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["certified"] and s["test_success"] in (True, False)
