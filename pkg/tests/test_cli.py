import csv
import json
import os
import shutil
from pathlib import Path

import numpy as np
import pytest
import yaml

from mfgstop.cli import main, run, sweep
from mfgstop.io import load_selected
from mfgstop.population import fixed_point_residual
from mfgstop.scenarios import build, load_config

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("MFGSTOP_REGEN_GOLDEN") == "1"
CURVE_HEADER = ["t", "x", "r", "n_isolated", "n_flat", "rho_min", "rho_max", "rho_selected", "residual"]
RESULTS_HEADER = ["t", "rho_selected", "empirical", "residual"]
AGENTS_HEADER = ["agent_id", "U", "tau", "gap"]


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def column(rows, header, name):
    return np.array([float(r[header.index(name)]) for r in rows])


def write_config(tmp_path, **raw):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


@pytest.mark.parametrize("name", sorted(p.stem for p in SCENARIOS.glob("*.yaml")))
def test_golden_outputs(name, tmp_path, capsys):
    out = tmp_path / name
    code = main(["simulate", "--config", str(SCENARIOS / f"{name}.yaml"), "--out", str(out),
                 "--agents", "1000", "--agents-csv"])
    assert code == 0, capsys.readouterr().err
    header, _ = read_csv(out / "curve.csv")
    assert header in (CURVE_HEADER, CURVE_HEADER[:1] + ["x0"] + CURVE_HEADER[2:])
    assert read_csv(out / "results.csv")[0] == RESULTS_HEADER
    assert read_csv(out / "agents.csv")[0] == AGENTS_HEADER
    for f in ("solutions.json", "plot.json", "curve.json", "results.json"):
        assert (out / f).exists()
    golden = GOLDEN / name
    if REGEN:
        golden.mkdir(parents=True, exist_ok=True)
        for f in ("curve.csv", "results.csv"):
            shutil.copy(out / f, golden / f)
    for f in ("curve.csv", "results.csv"):
        assert (out / f).read_text() == (golden / f).read_text(), f"{name}/{f} differs from golden"


def test_uniform_toy_value(tmp_path):
    assert run(SCENARIOS / "uniform_toy.yaml", "solve", {"out": str(tmp_path)}) == 0
    header, rows = read_csv(tmp_path / "curve.csv")
    t = column(rows, header, "t")
    k = int(np.argmin(np.abs(t - 0.25)))
    assert column(rows, header, "rho_selected")[k] == pytest.approx(0.5, abs=1e-12)
    assert not (tmp_path / "results.csv").exists()


def test_sunspot_horizon_curve(tmp_path):
    assert run(SCENARIOS / "sunspot_horizon.yaml", "solve", {"out": str(tmp_path)}) == 0
    header, rows = read_csv(tmp_path / "curve.csv")
    t, rho = column(rows, header, "t"), column(rows, header, "rho_selected")
    assert np.all(rho[t < 1.0] == 0.0) and np.all(rho[t >= 1.0] == 1.0)


def test_missing_horizon_is_named(tmp_path, capsys):
    cfg = write_config(tmp_path, scenario="uniform-toy", dt=0.01)
    assert main(["solve", "--config", str(cfg)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error" and err["kind"] == "config" and "horizon" in err["fields"]


def test_all_problems_reported(tmp_path, capsys):
    cfg = write_config(tmp_path, scenario="three-mass", horizon=1.0, dt=-1, c=-2, eps=0.4, bogus=1,
                       policy="best", formats="xml")
    assert main(["solve", "--config", str(cfg)]) == 2
    fields = json.loads(capsys.readouterr().err)["fields"]
    assert set(fields) >= {"dt", "c", "eps", "bogus", "policy", "formats"}


def test_bad_config_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert json.loads(capsys.readouterr().err)["fields"] == ["config"]


def test_contract_violation_exit(tmp_path, capsys):
    # index:1 follows the middle three-mass root, which decreases
    cfg = write_config(tmp_path, scenario="three-mass", horizon=1.0, dt=0.01, policy="index:1",
                       output_dir=str(tmp_path / "o"))
    assert main(["solve", "--config", str(cfg)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "contract" and err["where"] == "equilibrium.build_curve"


def test_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(SCENARIOS / "uniform_toy.yaml"), "--out", str(out), "--dt", "0.05",
                 "--agents", "500", "--seed", "3", "--u-res", "512", "--format", "csv"]) == 0
    header, rows = read_csv(out / "curve.csv")
    assert len(rows) == 21
    assert not (out / "curve.json").exists()
    sol = json.loads((out / "solutions.json").read_text())
    assert sol["population"]["n_agents"] == 500 and sol["population"]["master_seed"] == 3


def test_policy_override_minimal(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--config", str(SCENARIOS / "three_mass.yaml"), "--out", str(out),
                 "--policy", "minimal"]) == 0
    sol = json.loads((out / "solutions.json").read_text())
    assert sol["policy"] == "minimal" and sol["flags"]


def test_audit_file(tmp_path):
    out = tmp_path / "o"
    assert main(["audit", "--config", str(SCENARIOS / "three_mass.yaml"), "--out", str(out),
                 "--agents", "1000"]) == 0
    audit = json.loads((out / "audit.json").read_text())
    assert audit["worst_audit_gap"] <= 1e-12 and audit["audit_sample"] == 100


@pytest.mark.parametrize("name", ["uniform_toy", "three_mass", "common_noise", "custom"])
def test_solutions_round_trip(name, tmp_path):
    out = tmp_path / "o"
    assert run(SCENARIOS / f"{name}.yaml", "simulate", {"out": str(out), "agents": 2000}) == 0
    sol = json.loads((out / "solutions.json").read_text())
    grid, selected = load_selected(out / "solutions.json")
    sc = build(load_config(SCENARIOS / f"{name}.yaml").with_value("n_agents", 2000))
    assert np.array_equal(grid, sc.grid)
    again = fixed_point_residual(sc.population(), selected)
    assert abs(again - sol["population"]["sup_residual"]) <= 1e-12


def test_sweep_regimes(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(SCENARIOS / "uniform_toy.yaml"), "--out", str(out),
                 "--param", "c", "--values", "0,0.5,1,1.5"]) == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header == ["value", "t", "rho_max", "rho_min", "n_solutions"]
    v, t = column(rows, header, "value"), column(rows, header, "t")
    mx, mn = column(rows, header, "rho_max"), column(rows, header, "rho_min")
    n = column(rows, header, "n_solutions")
    for c, expected in ((0.0, np.minimum(t, 1)), (0.5, np.minimum(2 * t, 1))):
        sel = v == c
        np.testing.assert_allclose(mx[sel], expected[sel], atol=1e-9)
        assert np.all(n[sel] == 1)
    crit = (v == 1.0)
    assert mn[crit & (t == 0)][0] == 0.0 and np.all(mx[crit] == 1.0)
    assert np.all(mx[v == 1.5] == 1.0)


def test_sweep_eps_window(tmp_path):
    out = tmp_path / "o"
    assert sweep(SCENARIOS / "three_mass.yaml", "eps", [0.05, 0.1, 0.2], {"out": str(out)}) == 0
    header, rows = read_csv(out / "sweep.csv")
    n, v = column(rows, header, "n_solutions"), column(rows, header, "value")
    assert np.any(n[v == 0.1] == 3)


def test_sweep_validation(tmp_path, capsys):
    assert main(["sweep", "--config", str(SCENARIOS / "uniform_toy.yaml"), "--param", "c", "--values", ""]) == 2
    assert "values" in json.loads(capsys.readouterr().err)["fields"]
    assert sweep(SCENARIOS / "uniform_toy.yaml", "dt", [0.1]) == 2
    assert "param" in json.loads(capsys.readouterr().err)["fields"]
