"""Input validation helpers shared across modules."""
from __future__ import annotations

import numpy as np


class ContractViolation(RuntimeError):
    """A numerical contract between components was broken.

    ``where`` names the module/operation that detected it so that callers
    (notably the CLI) can report it in a machine-readable way.
    """

    def __init__(self, message: str, where: str = ""):
        super().__init__(message)
        self.where = where


class NonMonotoneBranch(ContractViolation):
    """A selected equilibrium branch decreases somewhere on the grid."""

    def __init__(self, message: str, index: int, where: str = "equilibrium.build_curve"):
        super().__init__(message, where)
        self.index = index


def as_grid(grid, name: str = "grid") -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(grid)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        bad = int(np.nonzero(np.diff(grid) <= 0)[0][0])
        raise ValueError(f"{name} must be strictly increasing (violated at index {bad + 1})")
    return grid


def first_decrease(values: np.ndarray, atol: float = 0.0) -> int | None:
    """Index ``k`` of the first ``values[k] < values[k-1] - atol`` along axis 0."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        return None
    drops = np.diff(values, axis=0) < -atol
    if drops.ndim > 1:
        drops = drops.any(axis=tuple(range(1, drops.ndim)))
    idx = np.nonzero(drops)[0]
    return int(idx[0]) + 1 if idx.size else None


def time_grid(horizon: float, dt: float) -> np.ndarray:
    """Uniform grid ``0, dt, ..., horizon`` with nodes rounded to kill drift."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon < dt:
        raise ValueError("horizon must be at least dt")
    n = int(round(horizon / dt))
    grid = np.round(np.arange(n + 1) * dt, 12)
    if grid[-1] < horizon - 1e-12:
        grid = np.append(grid, horizon)
    return grid
