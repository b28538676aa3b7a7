"""Finite-population Monte Carlo for the continuum of agents.

Agent ``i`` owns the ``i``-th output of a counter-based Philox stream keyed by
``(master_seed, stream)``, so its draws do not depend on the population size,
chunking or worker count. Each agent draws one uniform ``p_i`` and follows
the comonotone signal path ``Y_t = F_t^{-1}(p_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from ._validation import ContractViolation, as_grid, first_decrease
from .agent import AgentProblem, optimality_check, optimality_gaps
from .distributions import TimeIndexedCdf
from .model import IntensityModel, MonotonePath, RateFunction

SIGNAL_STREAM = 0
AUDIT_STREAM = 1


def agent_uniforms(master_seed: int, ids, stream: int = SIGNAL_STREAM) -> np.ndarray:
    """Uniforms in ``(0, 1)`` for the given agent ids, one per agent."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return np.zeros(0)
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64)
    lo, hi = int(ids.min()), int(ids.max())
    # each Philox counter step yields a block of four outputs
    bg = np.random.Philox(key=key)
    bg.advance(lo // 4)
    skip = lo % 4
    raw = bg.random_raw(hi - lo + 1 + skip)[skip:][ids - lo]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


@dataclass
class PopulationConfig:
    """Population of ``n_agents`` signal-driven agents on a common-noise path."""

    n_agents: int
    master_seed: int
    cdf: TimeIndexedCdf
    model: IntensityModel
    rate: RateFunction
    x_path: MonotonePath
    horizon: Optional[float] = None
    chunk_size: int = 8192
    n_jobs: int = 1
    stop_atol: float = 0.0

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.horizon is None:
            self.horizon = float(self.grid[-1])

    @property
    def grid(self) -> np.ndarray:
        return self.x_path.grid

    def rates(self) -> np.ndarray:
        return np.array([self.rate(t, x) for t, x in zip(self.grid, self.x_path.values)])

    def signals(self, ids) -> np.ndarray:
        return self.cdf.sample_paths(self.grid, agent_uniforms(self.master_seed, ids))

    def intensities(self, ids, rho) -> np.ndarray:
        y = self.signals(ids)
        cols = [np.asarray(self.model.g(t, x, y[:, k], rho[k]), dtype=float)
                for k, (t, x) in enumerate(zip(self.grid, self.x_path.values))]
        return np.stack(cols, axis=1)


@dataclass
class SunspotConfig:
    """``n`` agents indexed ``i = k/n`` with intensity ``(r - i + rho_t) v 0``."""

    n_agents: int
    x_path: MonotonePath
    r: float
    horizon: Optional[float] = None
    master_seed: int = 0
    chunk_size: int = 8192
    n_jobs: int = 1
    stop_atol: float = 1e-12

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.horizon is None:
            self.horizon = float(self.grid[-1])

    @property
    def grid(self) -> np.ndarray:
        return self.x_path.grid

    def rates(self) -> np.ndarray:
        return np.full(self.grid.shape, float(self.r))

    def index(self, ids) -> np.ndarray:
        return (np.asarray(ids, dtype=float) + 1.0) / self.n_agents

    def signals(self, ids) -> np.ndarray:
        return np.repeat(self.index(ids)[:, None], self.grid.size, axis=1)

    def intensities(self, ids, rho) -> np.ndarray:
        return np.maximum(self.r - self.index(ids)[:, None] + np.asarray(rho)[None, :], 0.0)

    def proportion(self) -> np.ndarray:
        """``floor_n((X_t ^ 1) v 0)`` as integer counts ``m_t`` (``rho_t = m_t / n``)."""
        x = np.clip(np.asarray(self.x_path.values, dtype=float).reshape(self.grid.size, -1)[:, 0], 0.0, 1.0)
        # tiny offset guards values such as 0.57 * 100 = 56.999999999999993
        return np.clip(np.floor(x * self.n_agents + 1e-9), 0, self.n_agents).astype(np.int64)


@dataclass
class PopulationResult:
    grid: np.ndarray
    rho: np.ndarray
    stopping_times: np.ndarray
    empirical_path: np.ndarray
    sup_residual: float
    payoff_gaps: np.ndarray
    initial_signal: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def residual_path(self) -> np.ndarray:
        return np.abs(self.empirical_path - self.rho)


def _as_rho(cfg, curve_or_path) -> np.ndarray:
    rho = getattr(curve_or_path, "selected", curve_or_path)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != cfg.grid.shape:
        raise ValueError(f"proportion path has shape {rho.shape}, expected {cfg.grid.shape}")
    if np.any((rho < 0) | (rho > 1)) or first_decrease(rho) is not None:
        raise ValueError("proportion path must be nondecreasing with values in [0, 1]")
    grid = getattr(curve_or_path, "grid", None)
    if grid is not None and (grid.shape != cfg.grid.shape or np.any(grid != cfg.grid)):
        raise ValueError("curve grid differs from the population grid")
    return rho


def _chunk(cfg, rho, rates, ids):
    gamma = cfg.intensities(ids, rho)
    crossed = gamma - rates[None, :] >= -cfg.stop_atol
    K = cfg.grid.size
    tau_index = np.where(crossed.any(axis=1), crossed.argmax(axis=1), K)
    gaps = optimality_gaps(cfg.grid, gamma, rates, cfg.horizon, tau_index)
    y0 = cfg.signals(ids)[:, 0] if isinstance(cfg, PopulationConfig) else cfg.index(ids)
    return tau_index, gaps, y0


def _run_agents(cfg, rho):
    rates = cfg.rates()
    n = cfg.n_agents
    chunks = [np.arange(s, min(s + cfg.chunk_size, n)) for s in range(0, n, cfg.chunk_size)]
    if cfg.n_jobs == 1:
        parts = [_chunk(cfg, rho, rates, ids) for ids in chunks]
    else:
        parts = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(
            delayed(_chunk)(cfg, rho, rates, ids) for ids in chunks)
    tau_index = np.concatenate([p[0] for p in parts])
    gaps = np.concatenate([p[1] for p in parts])
    y0 = np.concatenate([p[2] for p in parts])
    return tau_index, gaps, y0


def _result(cfg, rho, tau_index, gaps, y0, check_integrability=True):
    K = cfg.grid.size
    never = np.nonzero(tau_index == K)[0]
    if check_integrability and never.size and not getattr(getattr(cfg, "rate", None), "r_plus_integrable", False):
        raise ContractViolation(
            f"agent {int(never[0])} never stops before the horizon and the rate is not declared "
            "integrable", "population.simulate")
    counts = np.bincount(tau_index, minlength=K + 1)[:K]
    empirical = np.cumsum(counts) / cfg.n_agents
    taus = np.where(tau_index < K, cfg.grid[np.minimum(tau_index, K - 1)], np.inf)
    return PopulationResult(cfg.grid, rho, taus, empirical, float(np.max(np.abs(empirical - rho))),
                            gaps, y0)


def simulate(cfg: PopulationConfig, curve, check_integrability: bool = True) -> PopulationResult:
    """Stop every agent by the threshold rule against ``curve`` and count.

    ``curve`` is an ``EquilibriumCurve`` or an explicit proportion path on
    ``cfg.grid``. ``sup_residual`` is the largest gap between the empirical
    stopped proportion and the input path.
    """
    rho = _as_rho(cfg, curve)
    tau_index, gaps, y0 = _run_agents(cfg, rho)
    return _result(cfg, rho, tau_index, gaps, y0, check_integrability)


def fixed_point_residual(cfg: PopulationConfig, candidate, check_integrability: bool = True) -> float:
    """Sup distance between ``candidate`` and the proportion it induces."""
    return simulate(cfg, candidate, check_integrability).sup_residual


def sunspot_game(n: int, x_path: MonotonePath, r: float, horizon: Optional[float] = None) -> PopulationResult:
    """``n``-player sunspot equilibrium in closed form, with its self-check.

    ``rho_t = floor_n((X_t ^ 1) v 0)`` and agent ``i = k/n`` stops at the first
    grid time with ``X_t >= i``. The empirical proportion must reproduce
    ``rho`` exactly.
    """
    cfg = SunspotConfig(n, x_path, r, horizon)
    counts = cfg.proportion()
    rho = counts / n
    K = cfg.grid.size
    tau_index = np.searchsorted(counts, np.arange(1, n + 1), side="left")
    taus = np.where(tau_index < K, cfg.grid[np.minimum(tau_index, K - 1)], np.inf)
    empirical = np.cumsum(np.bincount(tau_index, minlength=K + 1)[:K]) / n
    residual = float(np.max(np.abs(empirical - rho)))
    if residual != 0.0:
        raise ContractViolation(f"sunspot self-consistency fails by {residual}", "population.sunspot_game")
    gaps = np.concatenate([
        optimality_gaps(cfg.grid, cfg.intensities(ids, rho), cfg.rates(), cfg.horizon, tau_index[ids])
        for ids in (np.arange(s, min(s + cfg.chunk_size, n)) for s in range(0, n, cfg.chunk_size))
    ])
    return PopulationResult(cfg.grid, rho, taus, empirical, residual, gaps, cfg.index(np.arange(n)))


def audit_sample(cfg, sample_size: int) -> np.ndarray:
    """Deterministic sorted sample of agent ids for audits."""
    if sample_size > cfg.n_agents:
        raise ValueError("sample_size exceeds n_agents")
    gen = np.random.Generator(np.random.Philox(key=np.array([cfg.master_seed & 0xFFFFFFFFFFFFFFFF, AUDIT_STREAM],
                                                            dtype=np.uint64)))
    return np.sort(gen.choice(cfg.n_agents, size=sample_size, replace=False))


def payoff_audit(cfg, curve, sample_size: int, stopping_times=None, tol: float = 1e-12) -> float:
    """Worst optimality gap over a sample of agents.

    Each sampled agent's intensity path is rebuilt against ``curve``. Without
    ``stopping_times`` the threshold rule is checked against every grid time
    and a gap above ``tol`` raises ``ContractViolation``; with them, the gap
    of those given times is reported (used to detect agents acting on a
    different proportion path).
    """
    rho = _as_rho(cfg, curve)
    ids = audit_sample(cfg, sample_size)
    gamma = cfg.intensities(ids, rho)
    rates = cfg.rates()
    worst = 0.0
    for row, i in zip(gamma, ids):
        p = AgentProblem(cfg.grid, row, rates, cfg.horizon, atol=cfg.stop_atol)
        tau = None if stopping_times is None else float(stopping_times[i])
        report = optimality_check(p, tau, tol)
        worst = max(worst, report.gap)
    return worst
