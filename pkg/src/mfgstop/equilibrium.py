"""All solutions of the mean-field fixed-point equation and equilibrium curves.

For fixed ``(t, x, r)`` the stopped proportion ``u`` must satisfy
``1 - u = F_t(g_inv(t, x, r, u))``. Its zeros are found from the residual
``G(u) = F_t(g_inv(t, x, r, u)) - 1 + u``, which is continuous with
``G(0) <= 0 <= G(1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from ._validation import ContractViolation, NonMonotoneBranch, first_decrease
from .distributions import TimeIndexedCdf
from .model import IntensityModel, MonotonePath, RateFunction

DEFAULT_RESOLUTION = 4096
DEFAULT_TOL_ROOT = 1e-12
DEFAULT_TOL_FLAT = 1e-9

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolutionSet:
    """Zeros of ``G`` on ``[0, 1]``: isolated roots plus flat intervals."""

    isolated_roots: tuple
    flat_intervals: tuple
    brackets: tuple = ()

    @property
    def maximal(self) -> float:
        return max(self.candidates())

    @property
    def minimal(self) -> float:
        return min(self.candidates())

    def candidates(self) -> list:
        """Roots and flat-interval endpoints, ascending."""
        pts = list(self.isolated_roots)
        for lo, hi in self.flat_intervals:
            pts.extend((lo, hi))
        return sorted(pts)

    def contains(self, u: float, atol: float = 1e-9) -> bool:
        if any(abs(u - v) <= atol for v in self.isolated_roots):
            return True
        return any(lo - atol <= u <= hi + atol for lo, hi in self.flat_intervals)

    def to_dict(self) -> dict:
        return {
            "isolated_roots": [float(v) for v in self.isolated_roots],
            "flat_intervals": [[float(lo), float(hi)] for lo, hi in self.flat_intervals],
            "minimal": float(self.minimal),
            "maximal": float(self.maximal),
        }


def residual_function(cdf: TimeIndexedCdf, model: IntensityModel, t: float, x, r: float):
    """``u -> F_t(g_inv(t, x, r, u)) - 1 + u``, vectorised over ``u``."""

    def G(u):
        u = np.asarray(u, dtype=float)
        return np.asarray(cdf.eval(t, model.g_inv(t, x, r, u)), dtype=float) - 1.0 + u

    return G


def _bisect(G, a, b, ga, tol_root):
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        gm = float(G(m))
        if abs(gm) <= tol_root:
            return m, gm
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    gb = float(G(b))
    return (a, ga) if abs(ga) <= abs(gb) else (b, gb)


def _golden_abs(G, a, b):
    """Minimise ``|G|`` on ``[a, b]`` by golden-section search."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = abs(float(G(c))), abs(float(G(d)))
    for _ in range(120):
        if b - a <= 1e-15:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = abs(float(G(c)))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = abs(float(G(d)))
    return (c, fc) if fc <= fd else (d, fd)


def _edge(G, inside, outside, tol_flat):
    """Boundary between a flat point ``inside`` and a non-flat ``outside``."""
    for _ in range(60):
        m = 0.5 * (inside + outside)
        if abs(float(G(m))) <= tol_flat:
            inside = m
        else:
            outside = m
    return inside


def _runs(mask):
    """Maximal runs ``[start, stop]`` (inclusive) of True in ``mask``."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(padded)
    return list(zip(np.nonzero(d == 1)[0], np.nonzero(d == -1)[0] - 1))


def solve_all(cdf: TimeIndexedCdf, model: IntensityModel, t: float, x, r: float,
              resolution: int = DEFAULT_RESOLUTION, tol_root: float = DEFAULT_TOL_ROOT,
              tol_flat: float = DEFAULT_TOL_FLAT) -> SolutionSet:
    """Every zero of ``G`` on ``[0, 1]`` for one ``(t, x, r)``.

    Scans ``G`` on ``resolution + 1`` equispaced points. Runs of at least two
    points with ``|G| <= tol_flat`` become flat intervals (edges refined by
    bisection). Remaining sign changes are bisected to ``|G| <= tol_root``;
    local minima of ``|G|`` without a sign change are searched for tangential
    zeros by golden section.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    G = residual_function(cdf, model, float(t), x, float(r))
    u = np.linspace(0.0, 1.0, resolution + 1)
    g = G(u)
    if g[0] > tol_root or g[-1] < -tol_root:
        raise ContractViolation(
            f"G(0) = {g[0]:.3g}, G(1) = {g[-1]:.3g} at t={t}: c.d.f. or inverse intensity is broken",
            "equilibrium.solve_all",
        )
    flat = np.abs(g) <= tol_flat

    intervals = []
    covered = np.zeros_like(flat)
    for a, b in _runs(flat):
        if b == a:
            continue
        covered[a:b + 1] = True
        lo = u[a] if a == 0 else _edge(G, u[a], u[a - 1], tol_flat)
        hi = u[b] if b == resolution else _edge(G, u[b], u[b + 1], tol_flat)
        intervals.append((float(lo), float(hi)))

    roots, brackets = [], []
    small = np.abs(g) <= tol_root
    for k in np.nonzero(small & ~covered)[0]:
        roots.append(float(u[k]))
    live = ~covered & ~small
    sign = np.sign(g)
    for k in np.nonzero(live[:-1] & live[1:] & (sign[:-1] != sign[1:]))[0]:
        root, gr = _bisect(G, u[k], u[k + 1], g[k], tol_root)
        if abs(gr) > tol_root:
            raise ContractViolation(f"G jumps across zero near u={root:.6g} at t={t}",
                                    "equilibrium.solve_all")
        roots.append(float(root))
        brackets.append((float(u[k]), float(u[k + 1])))

    ag = np.abs(g)
    mid = slice(1, resolution)
    step = np.maximum(np.abs(g[2:] - g[1:-1]), np.abs(g[1:-1] - g[:-2]))
    cand = (live[mid] & live[:-2] & live[2:]
            & (sign[:-2] == sign[mid]) & (sign[mid] == sign[2:])
            & (ag[mid] <= ag[:-2]) & (ag[mid] <= ag[2:]) & (ag[mid] <= 4.0 * step))
    for k in np.nonzero(cand)[0] + 1:
        root, gr = _golden_abs(G, u[k - 1], u[k + 1])
        if gr <= tol_root:
            roots.append(float(root))
            brackets.append((float(u[k - 1]), float(u[k + 1])))

    roots.sort()
    merged = []
    for v in roots:
        if merged and v - merged[-1] <= 1e-10:
            continue
        if any(lo - 1e-10 <= v <= hi + 1e-10 for lo, hi in intervals):
            continue
        merged.append(v)
    return SolutionSet(tuple(merged), tuple(intervals), tuple(brackets))


@dataclass
class EquilibriumCurve:
    """Per-grid solution sets plus one selected branch."""

    grid: np.ndarray
    x: np.ndarray
    r: np.ndarray
    solution_sets: list
    selected: np.ndarray
    policy: str
    residual: np.ndarray
    flags: list = field(default_factory=list)

    def __call__(self, t):
        k = np.searchsorted(self.grid, t, side="right") - 1
        if np.any(k < 0):
            raise ValueError("curve evaluated before its first grid time")
        return self.selected[k]

    def path(self) -> MonotonePath:
        return MonotonePath(self.grid, self.selected)

    def branch(self, which: str) -> np.ndarray:
        return np.array([getattr(s, which) for s in self.solution_sets])


def _parse_policy(policy):
    if isinstance(policy, str):
        if policy in ("maximal", "minimal"):
            return policy, None
        if policy.startswith("index:"):
            return "index", int(policy.split(":", 1)[1])
        raise ValueError(f"unknown policy {policy!r}")
    if isinstance(policy, (int, np.integer)):
        return "index", int(policy)
    if isinstance(policy, tuple) and len(policy) == 2 and policy[0] == "index":
        return "index", int(policy[1])
    return "path", np.asarray(policy, dtype=float)


def _follow_index(sets, k0):
    cands = sets[0].candidates()
    out = [cands[min(max(k0, 0), len(cands) - 1)]]
    for s in sets[1:]:
        prev = out[-1]
        out.append(min(s.candidates(), key=lambda c: (abs(c - prev), c)))
    return np.array(out)


def pointwise_residual(cdf, model, t, x, r, u) -> float:
    """``|1 - u - F_t(g_inv(t, x, r, u))|``."""
    return abs(float(residual_function(cdf, model, float(t), x, float(r))(u)))


def build_curve(cdf: TimeIndexedCdf, model: IntensityModel, rate: RateFunction,
                x_path: MonotonePath, policy="maximal", resolution: int = DEFAULT_RESOLUTION,
                tol_root: float = DEFAULT_TOL_ROOT, tol_flat: float = DEFAULT_TOL_FLAT,
                n_jobs: int = 1) -> EquilibriumCurve:
    """Solve on every grid point of ``x_path`` and select a branch.

    ``policy`` is ``"maximal"``, ``"minimal"``, ``"index:k"`` (nearest-root
    continuation of the ``k``-th smallest solution at the first grid time) or
    an explicit array of proportions. Raises ``NonMonotoneBranch`` when the
    selection decreases. For minimal and indexed branches, grid indices where
    the branch jumps past solutions already available at that time (so it is
    not right-continuous there) are recorded in ``flags``.
    """
    kind, arg = _parse_policy(policy)
    grid = x_path.grid
    xs = x_path.values
    rs = np.array([rate(t, x) for t, x in zip(grid, xs)])
    jobs = (delayed(solve_all)(cdf, model, float(t), x, r, resolution, tol_root, tol_flat)
            for t, x, r in zip(grid, xs, rs))
    sets = list(Parallel(n_jobs=n_jobs, prefer="threads")(jobs)) if n_jobs != 1 else [
        solve_all(cdf, model, float(t), x, r, resolution, tol_root, tol_flat)
        for t, x, r in zip(grid, xs, rs)]

    if kind == "maximal":
        selected = np.array([s.maximal for s in sets])
        tag = "maximal"
    elif kind == "minimal":
        selected = np.array([s.minimal for s in sets])
        tag = "minimal"
    elif kind == "index":
        selected = _follow_index(sets, arg)
        tag = f"index:{arg}"
    else:
        selected = np.asarray(arg, dtype=float)
        if selected.shape != grid.shape:
            raise ValueError(f"explicit path has shape {selected.shape}, expected {grid.shape}")
        if np.any((selected < 0) | (selected > 1)):
            raise ValueError("explicit path must take values in [0, 1]")
        tag = "path"

    bad = first_decrease(selected, atol=tol_flat)
    if bad is not None:
        raise NonMonotoneBranch(
            f"{tag} branch decreases at t={grid[bad]:g}: {selected[bad - 1]:.12g} -> {selected[bad]:.12g}",
            bad,
        )
    residual = np.array([pointwise_residual(cdf, model, t, x, r, v)
                         for t, x, r, v in zip(grid, xs, rs, selected)])
    flags = []
    for k in range(len(grid) - 1 if kind in ("minimal", "index") else 0):
        lo, hi = selected[k], selected[k + 1]
        if hi - lo <= tol_flat:
            continue
        s = sets[k]
        above = [v for v in s.candidates() if lo + tol_flat < v <= hi + tol_flat]
        if above or any(a <= lo + tol_flat and b > lo + tol_flat for a, b in s.flat_intervals):
            flags.append(k)
    return EquilibriumCurve(grid, xs, rs, sets, selected, tag, residual, flags)


@dataclass(frozen=True)
class UniquenessReport:
    locally_unique: bool
    margin: float
    sup_interaction: float


def interaction_density(cdf, model, t, x, r, u) -> np.ndarray:
    """``c f_t(r - x - c u)`` for an additive model."""
    if cdf.density is None:
        raise ValueError("the c.d.f. family has no density; uniqueness diagnostic unavailable")
    c = model.additive_c
    if c is None:
        raise ValueError("uniqueness diagnostic requires an additive intensity model")
    u = np.asarray(u, dtype=float)
    return c * np.asarray(cdf.density(float(t), model.g_inv(t, x, r, u)), dtype=float)


def uniqueness_diagnostic(cdf, model, t, x, r, root: float, radius: float = 0.05,
                          n: int = 2001) -> UniquenessReport:
    """Local implicit-function check ``c f_t(r - x - c u) < 1`` around ``root``.

    The supremum is taken over ``n`` points of ``[root - radius, root + radius]``
    clipped to ``[0, 1]``.
    """
    u = np.linspace(max(0.0, root - radius), min(1.0, root + radius), n)
    m = float(np.max(interaction_density(cdf, model, t, x, r, u)))
    return UniquenessReport(m < 1.0, 1.0 - m, m)


def global_interaction_bound(cdf, model, t, x, r, n: int = 20001) -> float:
    """``sup_{u in [0,1]} c f_t(r - x - c u)``; below 1 means a unique solution."""
    return float(np.max(interaction_density(cdf, model, t, x, r, np.linspace(0.0, 1.0, n))))


def randomized_switch(curve_min: EquilibriumCurve, curve_max: EquilibriumCurve, sigma: float,
                      tol: float = DEFAULT_TOL_FLAT) -> np.ndarray:
    """Follow ``curve_min`` on ``[0, sigma)`` and ``curve_max`` from ``sigma`` on."""
    if curve_min.grid.shape != curve_max.grid.shape or np.any(curve_min.grid != curve_max.grid):
        raise ValueError("curves must share a grid")
    path = np.where(curve_min.grid < sigma, curve_min.selected, curve_max.selected)
    bad = first_decrease(path, atol=tol)
    if bad is not None:
        raise NonMonotoneBranch(f"switched path decreases at t={curve_min.grid[bad]:g}", bad,
                                "equilibrium.randomized_switch")
    return path
