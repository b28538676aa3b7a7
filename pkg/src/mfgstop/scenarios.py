"""Scenario configuration: validation and construction of model objects.

A scenario file is YAML with top-level keys; see README for the schema.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ._validation import time_grid
from .distributions import TimeIndexedCdf, load_cdf_csv, three_mass_family, uniform_shifted_family
from .equilibrium import (DEFAULT_RESOLUTION, DEFAULT_TOL_FLAT, DEFAULT_TOL_ROOT, EquilibriumCurve,
                          build_curve, randomized_switch)
from .model import (IntensityModel, MonotonePath, RateFunction, additive_model, constant_rate,
                    linear_function, load_path_csv, path_from_function, power_function, rate_from_table,
                    step_function, table_model, zero_function)
from .population import PopulationConfig, SunspotConfig

SCENARIOS = ("uniform-toy", "three-mass", "sunspot", "sunspot-horizon", "common-noise-uniform",
             "randomized-switch", "custom")
REQUIRED = ("scenario", "horizon", "dt")
DEFAULTS = {
    "r": 1.0,
    "c": None,
    "eps": 0.1,
    "T": None,
    "sigma": None,
    "u_resolution": DEFAULT_RESOLUTION,
    "tol_root": DEFAULT_TOL_ROOT,
    "tol_flat": DEFAULT_TOL_FLAT,
    "n_agents": 10_000,
    "master_seed": 0,
    "policy": "maximal",
    "shift": None,
    "x_path": None,
    "output_dir": "out",
    "formats": "both",
    "agents_csv": False,
    "audit_sample": 100,
    "n_jobs": 1,
    "custom": None,
}
DEFAULT_C = {"three-mass": 0.9, "randomized-switch": 0.9, "sunspot": 1.0}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``fields`` lists every offending key."""

    def __init__(self, problems: dict):
        self.fields = sorted(problems)
        self.problems = problems
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(problems.items())))


@dataclass
class ScenarioConfig:
    scenario: str
    horizon: float
    dt: float
    r: float = 1.0
    c: float = 0.5
    eps: float = 0.1
    T: Optional[float] = None
    sigma: Optional[float] = None
    u_resolution: int = DEFAULT_RESOLUTION
    tol_root: float = DEFAULT_TOL_ROOT
    tol_flat: float = DEFAULT_TOL_FLAT
    n_agents: int = 10_000
    master_seed: int = 0
    policy: Any = "maximal"
    shift: Optional[dict] = None
    x_path: Optional[dict] = None
    output_dir: str = "out"
    formats: str = "both"
    agents_csv: bool = False
    audit_sample: int = 100
    n_jobs: int = 1
    custom: Optional[dict] = None
    base_dir: Path = field(default_factory=Path.cwd)

    def with_value(self, name: str, value) -> "ScenarioConfig":
        data = dict(self.__dict__)
        data[name] = value
        return validate(data, self.base_dir)


def _policy_ok(p) -> bool:
    if p in ("maximal", "minimal", "path"):
        return True
    if isinstance(p, str) and p.startswith("index:"):
        try:
            return int(p.split(":", 1)[1]) >= 0
        except ValueError:
            return False
    return False


def validate(raw: dict, base_dir=None) -> ScenarioConfig:
    """Check a raw mapping, collecting every problem before raising."""
    if not isinstance(raw, dict):
        raise ConfigError({"<root>": "config must be a mapping"})
    problems = {}
    for key in REQUIRED:
        if raw.get(key) is None:
            problems[key] = "missing required key"
    known = set(REQUIRED) | set(DEFAULTS) | {"base_dir"}
    for key in raw:
        if key not in known:
            problems[key] = "unknown key"
    data = {**DEFAULTS, **{k: v for k, v in raw.items() if k in known}}
    scenario = data.get("scenario")
    if scenario is not None and scenario not in SCENARIOS:
        problems["scenario"] = f"must be one of {', '.join(SCENARIOS)}"
    if data["c"] is None:
        data["c"] = DEFAULT_C.get(scenario, 0.5)

    def number(key, positive=False, nonneg=False):
        v = data.get(key)
        if v is None:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            problems[key] = "must be a number"
        elif positive and v <= 0:
            problems[key] = "must be > 0"
        elif nonneg and v < 0:
            problems[key] = "must be >= 0"

    number("dt", positive=True)
    number("horizon", positive=True)
    number("r")
    number("c", nonneg=True)
    number("eps", positive=True)
    number("T", positive=True)
    number("sigma", nonneg=True)
    number("tol_root", positive=True)
    number("tol_flat", positive=True)
    if "dt" not in problems and "horizon" not in problems and data.get("dt") and data.get("horizon"):
        if data["horizon"] < data["dt"]:
            problems["horizon"] = "must be >= dt"
    for key, lo in (("u_resolution", 64), ("n_agents", 1), ("audit_sample", 0), ("n_jobs", -1)):
        v = data.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < lo or v == 0 and key == "n_jobs":
            problems[key] = f"must be an integer >= {lo}"
    if isinstance(data.get("master_seed"), bool) or not isinstance(data.get("master_seed"), int) \
            or data["master_seed"] < 0:
        problems["master_seed"] = "must be a nonnegative integer"
    if not _policy_ok(data.get("policy")):
        problems["policy"] = "must be maximal, minimal, index:k or path"
    if data.get("formats") not in ("csv", "json", "both"):
        problems["formats"] = "must be csv, json or both"
    if scenario == "three-mass" or scenario == "randomized-switch":
        if isinstance(data.get("eps"), (int, float)) and not 0 < data["eps"] < 0.25:
            problems["eps"] = "must lie in (0, 1/4)"
    if scenario == "sunspot-horizon" and data.get("T") is None:
        problems["T"] = "required for sunspot-horizon"
    if scenario == "randomized-switch" and data.get("sigma") is None:
        problems["sigma"] = "required for randomized-switch"
    if scenario == "custom":
        custom = data.get("custom")
        if not isinstance(custom, dict) or "cdf_file" not in custom:
            problems["custom"] = "custom scenario needs custom.cdf_file"
        elif custom.get("model", "additive") not in ("additive", "custom-table"):
            problems["custom"] = "custom.model must be additive or custom-table"
    for key in ("shift", "x_path"):
        entry = data.get(key)
        if entry is not None and (not isinstance(entry, dict) or entry.get("kind") not in _TIME_FUNCTIONS):
            problems[key] = f"must be a mapping with kind in {', '.join(_TIME_FUNCTIONS)}"
    if problems:
        raise ConfigError(problems)
    data["base_dir"] = Path(base_dir if base_dir is not None else raw.get("base_dir", Path.cwd()))
    for key in ("dt", "horizon", "r", "c", "eps", "tol_root", "tol_flat"):
        data[key] = float(data[key])
    return ScenarioConfig(**data)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return validate(raw if raw is not None else {}, path.parent)


_TIME_FUNCTIONS = ("zero", "linear", "power", "step", "table")


def time_function(entry: Optional[dict], default, base_dir: Path):
    """Callable ``t -> value`` from a ``{kind: ...}`` mapping (not for tables)."""
    if entry is None:
        return default
    kind = entry["kind"]
    args = {k: float(v) for k, v in entry.items() if k not in ("kind", "file")}
    if kind == "zero":
        return zero_function()
    if kind == "linear":
        return linear_function(**args)
    if kind == "power":
        return power_function(**args)
    if kind == "step":
        return step_function(**args)
    path = load_path_csv(base_dir / entry["file"])
    return lambda t: float(np.atleast_1d(path(t))[0])


def common_noise_path(cfg: ScenarioConfig, grid, default=None) -> MonotonePath:
    entry = cfg.x_path
    if entry is not None and entry["kind"] == "table":
        src = load_path_csv(cfg.base_dir / entry["file"])
        return MonotonePath(grid, src(grid))
    return path_from_function(time_function(entry, default or zero_function(), cfg.base_dir), grid)


@dataclass
class Scenario:
    """Built objects for one configuration."""

    config: ScenarioConfig
    grid: np.ndarray
    cdf: TimeIndexedCdf
    model: IntensityModel
    rate: RateFunction
    x_path: MonotonePath
    policy: Any
    selector_path: Optional[MonotonePath] = None

    def curve(self) -> EquilibriumCurve:
        cfg = self.config
        kw = dict(resolution=cfg.u_resolution, tol_root=cfg.tol_root, tol_flat=cfg.tol_flat, n_jobs=cfg.n_jobs)
        if cfg.scenario == "randomized-switch":
            lo = build_curve(self.cdf, self.model, self.rate, self.x_path, "minimal", **kw)
            hi = build_curve(self.cdf, self.model, self.rate, self.x_path, "maximal", **kw)
            path = randomized_switch(lo, hi, cfg.sigma)
            curve = build_curve(self.cdf, self.model, self.rate, self.x_path, path, **kw)
            curve.policy = f"switch:{cfg.sigma:g}"
            return curve
        return build_curve(self.cdf, self.model, self.rate, self.x_path, self.policy, **kw)

    def population(self):
        cfg = self.config
        if cfg.scenario == "sunspot":
            return SunspotConfig(cfg.n_agents, self.selector_path, cfg.r, cfg.horizon)
        return PopulationConfig(cfg.n_agents, cfg.master_seed, self.cdf, self.model, self.rate, self.x_path,
                                cfg.horizon, n_jobs=cfg.n_jobs)


def build(cfg: ScenarioConfig) -> Scenario:
    grid = time_grid(cfg.horizon, cfg.dt)
    name = cfg.scenario
    policy = cfg.policy
    selector = None
    rate = constant_rate(cfg.r)
    zero_x = MonotonePath(grid, np.zeros(grid.size))
    if name == "uniform-toy":
        cdf = uniform_shifted_family(cfg.r, time_function(cfg.shift, linear_function(), cfg.base_dir))
        model, x_path = additive_model(cfg.c), zero_x
    elif name in ("three-mass", "randomized-switch"):
        cdf = three_mass_family(cfg.eps, time_function(cfg.shift, linear_function(), cfg.base_dir))
        model, x_path = additive_model(cfg.c), zero_x
    elif name == "sunspot":
        # continuum counterpart: tautological equation, X selects the equilibrium
        cdf = uniform_shifted_family(cfg.r, zero_function())
        model, x_path = additive_model(cfg.c), zero_x
        selector = common_noise_path(cfg, grid, linear_function())
        policy = np.clip(np.asarray(selector.values, dtype=float).reshape(grid.size, -1)[:, 0], 0.0, 1.0)
    elif name == "sunspot-horizon":
        cdf = uniform_shifted_family(cfg.r, step_function(cfg.T, 0.0, 2.0))
        model, x_path = additive_model(cfg.c), zero_x
        if policy == "path":
            selector = common_noise_path(cfg, grid, linear_function())
            x = np.clip(np.asarray(selector.values, dtype=float).reshape(grid.size, -1)[:, 0], 0.0, 1.0)
            policy = np.where(grid < cfg.T, x, 1.0)
    elif name == "common-noise-uniform":
        cdf = uniform_shifted_family(cfg.r, zero_function())
        model = additive_model(cfg.c, strict_in_time=True)
        x_path = common_noise_path(cfg, grid, power_function(2.0, 1.0, 2.0))
    else:
        custom = cfg.custom
        cdf = load_cdf_csv(cfg.base_dir / custom["cdf_file"])
        if custom.get("model", "additive") == "additive":
            model = additive_model(cfg.c)
        else:
            table = custom["h_table"]
            model = table_model(table["y"], table["h"], cfg.c)
        rate_cfg = custom.get("rate", {"kind": "constant", "value": cfg.r})
        if rate_cfg["kind"] == "constant":
            rate = constant_rate(rate_cfg["value"], bool(rate_cfg.get("r_plus_integrable", False)))
        else:
            rt = np.genfromtxt(cfg.base_dir / rate_cfg["file"], delimiter=",", names=True)
            rate = rate_from_table(np.atleast_1d(rt["t"]), np.atleast_1d(rt["r"]),
                                   bool(rate_cfg.get("r_plus_integrable", False)))
        x_path = common_noise_path(cfg, grid)
    if isinstance(policy, str) and policy == "path":
        raise ConfigError({"policy": f"policy 'path' is not available for scenario {name}"})
    return Scenario(cfg, grid, cdf, model, rate, x_path, policy, selector)
