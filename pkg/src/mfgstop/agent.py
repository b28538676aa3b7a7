"""Single-agent optimal stopping under a Cox-process default time.

Paths are step functions on a grid: a value at ``grid[k]`` holds on
``[grid[k], grid[k+1])`` and the last value holds up to ``horizon``. Under
the adjusted-rate identity the expected payoff of a path-deterministic
stopping time ``tau`` is ``exp(int_0^tau (r - gamma) ds)``, so no default
times need to be drawn to evaluate strategies.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import ContractViolation, as_grid, first_decrease
from .model import MonotonePath


def _widths(grid: np.ndarray, horizon: float) -> np.ndarray:
    return np.diff(np.append(grid, horizon))


@dataclass(frozen=True)
class AgentProblem:
    """Intensity and rate of one agent along one scenario path.

    ``gamma - rate`` must be nondecreasing along the grid; that is what makes
    the first crossing time optimal.
    """

    grid: np.ndarray
    gamma: np.ndarray
    rate: np.ndarray
    horizon: Optional[float] = None
    exp_variate: float = 1.0
    r_plus_integrable: bool = False
    atol: float = 0.0

    def __post_init__(self):
        grid = as_grid(self.grid)
        gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), grid.shape).copy()
        rate = np.broadcast_to(np.asarray(self.rate, dtype=float), grid.shape).copy()
        horizon = float(grid[-1] if self.horizon is None else self.horizon)
        if horizon < grid[-1]:
            raise ValueError("horizon must not precede the last grid time")
        if np.any(gamma < 0):
            raise ValueError("intensity must be nonnegative")
        k = first_decrease(gamma - rate, atol=self.atol)
        if k is not None:
            raise ValueError(f"gamma - r decreases at grid index {k}; the threshold rule does not apply")
        if self.exp_variate <= 0:
            raise ValueError("exp_variate must be positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "horizon", horizon)

    @classmethod
    def from_paths(cls, gamma_path: MonotonePath, rate_path, horizon=None, **kw) -> "AgentProblem":
        rate = rate_path.values if isinstance(rate_path, MonotonePath) else rate_path
        return cls(gamma_path.grid, gamma_path.values, rate, horizon, **kw)

    @property
    def widths(self) -> np.ndarray:
        return _widths(self.grid, self.horizon)

    def log_payoffs(self) -> np.ndarray:
        """``int_0^{t_k} (r - gamma) ds`` for every grid time and the horizon."""
        return np.concatenate(([0.0], np.cumsum((self.rate - self.gamma) * self.widths)))


def stopping_time(p: AgentProblem) -> float:
    """First grid time with ``gamma - r >= 0`` (``inf`` if none)."""
    hit = np.nonzero(p.gamma - p.rate >= -p.atol)[0]
    return float(p.grid[hit[0]]) if hit.size else np.inf


def default_time(gamma_path: MonotonePath, exp_variate, horizon: Optional[float] = None):
    """First time the cumulative hazard reaches ``exp_variate``.

    Hazard is integrated exactly over the steps and inverted linearly inside
    the crossing step. Returns ``inf`` where the total hazard up to
    ``horizon`` stays below the variate. Broadcasts over ``exp_variate``.
    """
    grid = gamma_path.grid
    gamma = np.asarray(gamma_path.values, dtype=float)
    horizon = float(grid[-1] if horizon is None else horizon)
    hazard = np.concatenate(([0.0], np.cumsum(gamma * _widths(grid, horizon))))
    e = np.asarray(exp_variate, dtype=float)
    if np.any(e <= 0):
        raise ValueError("exp_variate must be positive")
    k = np.searchsorted(hazard, e, side="left") - 1
    kk = np.clip(k, 0, len(grid) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = grid[kk] + (e - hazard[kk]) / gamma[kk]
    theta = np.where(e > hazard[-1], np.inf, theta)
    return float(theta) if theta.ndim == 0 else theta


def _log_payoff_at(p: AgentProblem, tau: float, logs: np.ndarray) -> float:
    if tau >= p.horizon:
        return float(logs[-1])
    k = int(np.searchsorted(p.grid, tau, side="right")) - 1
    if k < 0:
        raise ValueError("tau precedes the first grid time")
    return float(logs[k] + (p.rate[k] - p.gamma[k]) * (tau - p.grid[k]))


def payoff(p: AgentProblem, tau: float) -> float:
    """Expected payoff ``exp(int_0^tau (r - gamma) ds)`` of stopping at ``tau``.

    ``tau = inf`` needs ``p.r_plus_integrable``; the integral is then
    truncated at the horizon with a warning.
    """
    if np.isinf(tau):
        if not p.r_plus_integrable:
            raise ValueError("tau = inf requires an integrable positive rate part")
        warnings.warn("payoff at tau=inf truncated at the horizon", RuntimeWarning, stacklevel=2)
    return float(np.exp(_log_payoff_at(p, tau, p.log_payoffs())))


@dataclass(frozen=True)
class OptimalityReport:
    tau_star: float
    tau: float
    payoff: float
    best_payoff: float
    gap: float
    earliest_optimizer: float
    is_minimal: bool


def optimality_check(p: AgentProblem, tau: Optional[float] = None, tol: float = 1e-12) -> OptimalityReport:
    """Compare stopping at ``tau`` (default: the threshold rule) with every grid time.

    ``gap`` is the best grid-time payoff minus the payoff at ``tau``. With the
    default ``tau`` a gap above ``tol`` means ``gamma - r`` was not monotone
    and raises ``ContractViolation``. An infinite stopping time is evaluated
    as stopping at the horizon.
    """
    tau_star = stopping_time(p)
    chosen = tau_star if tau is None else float(tau)
    logs = p.log_payoffs()
    values = np.exp(logs)
    best = float(values.max())
    earliest = float(np.append(p.grid, p.horizon)[int(np.argmax(values == best))])
    if chosen <= p.grid[-1]:
        k = int(np.searchsorted(p.grid, chosen, side="right")) - 1
        value = float(values[k]) if p.grid[k] == chosen else float(np.exp(_log_payoff_at(p, chosen, logs)))
    else:
        value = float(np.exp(_log_payoff_at(p, chosen, logs)))
    gap = best - value
    if tau is None and gap > tol:
        raise ContractViolation(f"threshold rule is suboptimal by {gap:.3g}", "agent.optimality_check")
    star = min(tau_star, p.horizon)
    return OptimalityReport(tau_star, chosen, value, best, gap, earliest, bool(earliest == star))


def optimality_gaps(grid, gamma, rate, horizon, tau_index) -> np.ndarray:
    """Vectorised optimality gap for many agents sharing a grid.

    ``gamma`` has shape ``(n, K)``; ``tau_index[i]`` is the grid index of agent
    ``i``'s stopping time, or ``K`` for "never" (evaluated at the horizon).
    """
    grid = np.asarray(grid, dtype=float)
    w = _widths(grid, horizon)
    logs = np.concatenate((np.zeros((gamma.shape[0], 1)), np.cumsum((rate - gamma) * w, axis=1)), axis=1)
    values = np.exp(logs)
    chosen = np.take_along_axis(values, np.asarray(tau_index)[:, None], axis=1)[:, 0]
    return values.max(axis=1) - chosen
