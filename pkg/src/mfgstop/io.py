"""Result files: CSV/JSON tables, full solution sets and plot series."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumCurve
from .population import PopulationResult


def fmt(v) -> str:
    """17 significant digits, so every float round-trips exactly."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _x_columns(curve: EquilibriumCurve) -> list:
    x = np.asarray(curve.x)
    return ["x"] if x.ndim == 1 else [f"x{j}" for j in range(x.shape[1])]


def curve_rows(curve: EquilibriumCurve):
    header = ["t", *_x_columns(curve), "r", "n_isolated", "n_flat", "rho_min", "rho_max", "rho_selected",
              "residual"]
    rows = []
    for k, t in enumerate(curve.grid):
        s = curve.solution_sets[k]
        x = np.atleast_1d(curve.x[k])
        rows.append([t, *x, curve.r[k], len(s.isolated_roots), len(s.flat_intervals), s.minimal, s.maximal,
                     curve.selected[k], curve.residual[k]])
    return header, rows


def results_rows(result: PopulationResult):
    header = ["t", "rho_selected", "empirical", "residual"]
    rows = [[t, rho, emp, abs(emp - rho)] for t, rho, emp in zip(result.grid, result.rho, result.empirical_path)]
    return header, rows


def agents_rows(result: PopulationResult):
    header = ["agent_id", "U", "tau", "gap"]
    rows = [[i, u, tau, gap] for i, (u, tau, gap) in
            enumerate(zip(result.initial_signal, result.stopping_times, result.payoff_gaps))]
    return header, rows


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")
    return v


def write_table(out_dir: Path, stem: str, header, rows, formats: str) -> list:
    written = []
    if formats in ("csv", "both"):
        write_csv(out_dir / f"{stem}.csv", header, rows)
        written.append(f"{stem}.csv")
    if formats in ("json", "both"):
        payload = [{h: _jsonable(v) for h, v in zip(header, row)} for row in rows]
        write_json(out_dir / f"{stem}.json", payload)
        written.append(f"{stem}.json")
    return written


def write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)
        fh.write("\n")


def solutions_payload(scenario: str, curve: EquilibriumCurve, population: dict | None = None) -> dict:
    sets = []
    for k, t in enumerate(curve.grid):
        d = curve.solution_sets[k].to_dict()
        d.update(t=float(t), x=[float(v) for v in np.atleast_1d(curve.x[k])], r=float(curve.r[k]))
        sets.append(d)
    payload = {
        "scenario": scenario,
        "policy": curve.policy,
        "grid": [float(t) for t in curve.grid],
        "selected": [float(v) for v in curve.selected],
        "residual": [float(v) for v in curve.residual],
        "flags": [int(k) for k in curve.flags],
        "solution_sets": sets,
    }
    if population is not None:
        payload["population"] = {k: _jsonable(v) for k, v in population.items()}
    return payload


def load_selected(path) -> tuple:
    """``(grid, selected)`` from a ``solutions.json`` file."""
    with open(path) as fh:
        data = json.load(fh)
    return np.array(data["grid"], dtype=float), np.array(data["selected"], dtype=float)


def plot_payload(curve: EquilibriumCurve, result: PopulationResult | None = None) -> dict:
    series = {
        "rho_min": [float(v) for v in curve.branch("minimal")],
        "rho_max": [float(v) for v in curve.branch("maximal")],
        "rho_selected": [float(v) for v in curve.selected],
    }
    if result is not None:
        series["empirical"] = [float(v) for v in result.empirical_path]
    return {"t": [float(t) for t in curve.grid], "series": series}
