"""Command-line scenario runner.

    mfgstop solve    --config scenario.yaml
    mfgstop simulate --config scenario.yaml --agents 10000 --seed 7
    mfgstop audit    --config scenario.yaml
    mfgstop sweep    --config scenario.yaml --param c --values 0,0.5,1,1.5

Exit status 0 on success, 2 for configuration errors, 3 for numerical
contract violations; errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from ._validation import ContractViolation
from .io import (agents_rows, curve_rows, plot_payload, results_rows, solutions_payload, write_csv, write_json,
                 write_table)
from .population import payoff_audit, simulate, sunspot_game
from .scenarios import ConfigError, Scenario, build, validate

SWEEP_PARAMETERS = ("c", "eps", "r")
OVERRIDES = {"out": "output_dir", "seed": "master_seed", "agents": "n_agents", "dt": "dt",
             "u_res": "u_resolution", "policy": "policy", "format": "formats"}


def _read_raw(path: Path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError({"config": f"file not found: {path}"})
    except yaml.YAMLError as exc:
        raise ConfigError({"config": f"cannot parse: {exc}"})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError({"config": "top level must be a mapping"})
    return raw


def load(config_path, overrides: dict | None = None):
    path = Path(config_path)
    raw = _read_raw(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[OVERRIDES.get(key, key)] = value
    return validate(raw, path.parent)


def _out_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    if not out.is_absolute():
        out = cfg.base_dir / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _population(sc: Scenario, curve):
    cfg = sc.config
    pop_cfg = sc.population()
    if cfg.scenario == "sunspot":
        result = sunspot_game(cfg.n_agents, sc.selector_path, cfg.r, cfg.horizon)
    else:
        result = simulate(pop_cfg, curve)
    return pop_cfg, result


def _solve_and_write(sc: Scenario, with_population: bool, audit_file: bool) -> dict:
    cfg = sc.config
    out = _out_dir(cfg)
    curve = sc.curve()
    written = write_table(out, "curve", *curve_rows(curve), cfg.formats)
    result = population = None
    if with_population:
        pop_cfg, result = _population(sc, curve)
        population = {"n_agents": cfg.n_agents, "master_seed": cfg.master_seed,
                      "sup_residual": result.sup_residual}
        written += write_table(out, "results", *results_rows(result), cfg.formats)
        if cfg.agents_csv:
            write_csv(out / "agents.csv", *agents_rows(result))
            written.append("agents.csv")
        if cfg.audit_sample > 0:
            sample = min(cfg.audit_sample, cfg.n_agents)
            population["audit_sample"] = sample
            population["worst_audit_gap"] = payoff_audit(pop_cfg, result.rho, sample)
    write_json(out / "solutions.json", solutions_payload(cfg.scenario, curve, population))
    write_json(out / "plot.json", plot_payload(curve, result))
    written += ["solutions.json", "plot.json"]
    if audit_file and population is not None:
        write_json(out / "audit.json", {"scenario": cfg.scenario, **population})
        written.append("audit.json")
    return {"status": "ok", "output_dir": str(out), "files": written}


def run(config_path, command: str = "simulate", overrides: dict | None = None) -> int:
    """Run one scenario; returns the process exit status."""
    try:
        cfg = load(config_path, overrides)
        sc = build(cfg)
        if command == "solve":
            report = _solve_and_write(sc, False, False)
        elif command in ("simulate", "audit"):
            report = _solve_and_write(sc, True, command == "audit")
        else:
            raise ConfigError({"command": f"unknown command {command!r}"})
    except ConfigError as exc:
        return _fail({"kind": "config", "fields": exc.fields, "problems": exc.problems}, 2)
    except ContractViolation as exc:
        return _fail({"kind": "contract", "where": exc.where, "message": str(exc)}, 3)
    print(json.dumps(report))
    return 0


def sweep(config_path, parameter: str, values, overrides: dict | None = None) -> int:
    """Maximal/minimal solutions per grid time for each parameter value -> ``sweep.csv``."""
    try:
        problems = {}
        if parameter not in SWEEP_PARAMETERS:
            problems["param"] = f"must be one of {', '.join(SWEEP_PARAMETERS)}"
        values = list(values or [])
        if not values:
            problems["values"] = "must be a nonempty list"
        if problems:
            raise ConfigError(problems)
        base = load(config_path, {**(overrides or {}), "policy": "maximal"})
        rows = []
        for value in values:
            sc = build(base.with_value(parameter, float(value)))
            curve = sc.curve()
            for t, s in zip(curve.grid, curve.solution_sets):
                rows.append([float(value), t, s.maximal, s.minimal,
                             len(s.isolated_roots) + len(s.flat_intervals)])
        out = _out_dir(base)
        write_csv(out / "sweep.csv", ["value", "t", "rho_max", "rho_min", "n_solutions"], rows)
    except ConfigError as exc:
        return _fail({"kind": "config", "fields": exc.fields, "problems": exc.problems}, 2)
    except ContractViolation as exc:
        return _fail({"kind": "contract", "where": exc.where, "message": str(exc)}, 3)
    print(json.dumps({"status": "ok", "output_dir": str(out), "files": ["sweep.csv"]}))
    return 0


def _fail(payload: dict, code: int) -> int:
    print(json.dumps({"status": "error", **payload}), file=sys.stderr)
    return code


def _values(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mfgstop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("solve", "equilibrium curve only"), ("simulate", "curve and population"),
                        ("audit", "curve, population and optimality audit"), ("sweep", "parameter sweep")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--agents", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--u-res", dest="u_res", type=int)
        p.add_argument("--policy")
        p.add_argument("--format", choices=("csv", "json", "both"))
        if name in ("simulate", "audit"):
            p.add_argument("--agents-csv", action="store_true", default=None)
        if name == "sweep":
            p.add_argument("--param", required=True)
            p.add_argument("--values", type=_values, default=[])
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k) for k in OVERRIDES}
    if getattr(args, "agents_csv", None):
        overrides["agents_csv"] = True
    if args.command == "sweep":
        return sweep(args.config, args.param, args.values, overrides)
    return run(args.config, args.command, overrides)


if __name__ == "__main__":
    sys.exit(main())
