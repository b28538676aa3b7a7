"""Intensity models, interest-rate functions and monotone step paths."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import as_grid, first_decrease


@dataclass(frozen=True)
class IntensityModel:
    """Intensity ``gamma = g(t, x, y, u)`` together with its ``y``-inverse.

    ``g`` and ``g_inv`` broadcast over ``y``/``u`` (and ``r``); ``x`` is the
    common-noise value (scalar or 1-d array). ``additive_c`` is set only for
    additive models, where the uniqueness diagnostic applies.
    """

    g: Callable
    g_inv: Callable
    strict_in_time: bool = False
    name: str = "custom"
    additive_c: Optional[float] = None
    params: dict = field(default_factory=dict)


def additive_model(c: float, strict_in_time: bool = False) -> IntensityModel:
    """``g(t, x, y, u) = x + y + c u``; coordinates of a vector ``x`` are summed."""
    if c < 0:
        raise ValueError(f"interaction strength c must be >= 0, got {c!r}")
    c = float(c)

    def g(t, x, y, u):
        return np.sum(x) + np.asarray(y, dtype=float) + c * np.asarray(u, dtype=float)

    def g_inv(t, x, r, u):
        return np.asarray(r, dtype=float) - np.sum(x) - c * np.asarray(u, dtype=float)

    return IntensityModel(g, g_inv, strict_in_time, "additive", c, {"c": c})


def bisection_inverse(g, y_bracket=(-1.0, 2.0), margin: float = 1.0, tol: float = 1e-12,
                      max_expand: int = 60):
    """Build ``g_inv(t, x, r, u)`` for ``y -> g(t, x, y, u)`` increasing onto R.

    Vectorised bisection over broadcast ``(r, u)``; the bracket starts at
    ``y_bracket`` widened by ``margin`` and doubles outward until it encloses
    the target.
    """
    lo0, hi0 = y_bracket[0] - margin, y_bracket[1] + margin

    def g_inv(t, x, r, u):
        r, u = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(u, dtype=float))
        lo = np.full(r.shape, lo0)
        hi = np.full(r.shape, hi0)
        width = hi0 - lo0
        for _ in range(max_expand):
            need = g(t, x, lo, u) > r
            if not need.any():
                break
            lo = np.where(need, lo - width, lo)
            width *= 2
        width = hi0 - lo0
        for _ in range(max_expand):
            need = g(t, x, hi, u) < r
            if not need.any():
                break
            hi = np.where(need, hi + width, hi)
            width *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = g(t, x, mid, u) >= r
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
            if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(mid))):
                break
        out = 0.5 * (lo + hi)
        return out if out.ndim else float(out)

    return g_inv


def monotone_model(g, y_bracket=(-1.0, 2.0), margin: float = 1.0, tol: float = 1e-12,
                   strict_in_time: bool = False, name: str = "custom") -> IntensityModel:
    """Model from a monotone ``g`` without analytic inverse."""
    return IntensityModel(g, bisection_inverse(g, y_bracket, margin, tol), strict_in_time, name)


def table_model(y_knots, h_knots, c: float, strict_in_time: bool = False) -> IntensityModel:
    """``g(t, x, y, u) = x + h(y) + c u`` with ``h`` piecewise linear.

    ``h`` interpolates ``(y_knots, h_knots)``, must be strictly increasing, and
    is extended linearly with the end slopes so its range is all of R. The
    inverse is computed numerically.
    """
    y_knots = as_grid(y_knots, "y_knots")
    h_knots = np.asarray(h_knots, dtype=float)
    if h_knots.shape != y_knots.shape or y_knots.size < 2:
        raise ValueError("h_knots must match y_knots and have at least two entries")
    if np.any(np.diff(h_knots) <= 0):
        raise ValueError("h must be strictly increasing")
    if c < 0:
        raise ValueError(f"interaction strength c must be >= 0, got {c!r}")
    s_lo = (h_knots[1] - h_knots[0]) / (y_knots[1] - y_knots[0])
    s_hi = (h_knots[-1] - h_knots[-2]) / (y_knots[-1] - y_knots[-2])

    def h(y):
        y = np.asarray(y, dtype=float)
        out = np.interp(y, y_knots, h_knots)
        out = np.where(y < y_knots[0], h_knots[0] + s_lo * (y - y_knots[0]), out)
        return np.where(y > y_knots[-1], h_knots[-1] + s_hi * (y - y_knots[-1]), out)

    def g(t, x, y, u):
        return np.sum(x) + h(y) + c * np.asarray(u, dtype=float)

    return IntensityModel(g, bisection_inverse(g, (y_knots[0], y_knots[-1])), strict_in_time,
                          "custom-table", None, {"c": float(c)})


def check_model(model: IntensityModel, d: int = 1, n: int = 1000, seed: int = 0,
                y_range=(-2.0, 3.0), r_range=(-1.0, 3.0), atol: float = 1e-10) -> None:
    """Probe ``g`` on random ordered pairs and the ``g``/``g_inv`` round trip."""
    rng = np.random.default_rng(seed)
    for _ in range(n):
        t = rng.uniform(0, 5)
        x = rng.uniform(-1, 1, d)
        y = rng.uniform(*y_range)
        u = rng.uniform()
        base = float(model.g(t, x, y, u))
        for bumped in (
            (t + rng.uniform(0, 1), x, y, u),
            (t, x + rng.uniform(0, 1, d), y, u),
            (t, x, y + rng.uniform(0, 1), u),
            (t, x, y, min(1.0, u + rng.uniform(0, 1))),
        ):
            if float(model.g(*bumped)) < base - atol:
                raise ValueError(f"g decreases between {(t, x, y, u)} and {bumped}")
        rp = rng.uniform(*r_range)
        back = float(model.g(t, x, model.g_inv(t, x, rp, u), u))
        if abs(back - rp) > atol:
            raise ValueError(f"g(g_inv(r')) = {back!r} != {rp!r} at t={t}, x={x}, u={u}")


@dataclass(frozen=True)
class MonotonePath:
    """Right-continuous nondecreasing step path, constant on ``[t_k, t_{k+1})``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = as_grid(self.grid)
        values = np.asarray(self.values, dtype=float)
        if values.shape[0] != grid.size or values.ndim > 2:
            raise ValueError(f"values must have {grid.size} rows, got shape {values.shape}")
        k = first_decrease(values)
        if k is not None:
            raise ValueError(f"path decreases at grid index {k} (t={grid[k]:g})")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def index(self, t) -> np.ndarray:
        k = np.searchsorted(self.grid, t, side="right") - 1
        if np.any(k < 0):
            raise ValueError("path evaluated before its first grid time")
        return k

    def __call__(self, t):
        return self.values[self.index(t)]


def path_from_function(f: Callable, grid) -> MonotonePath:
    """Sample ``f`` on ``grid``; rejects decreasing samples."""
    grid = as_grid(grid)
    return MonotonePath(grid, np.array([f(float(t)) for t in grid], dtype=float))


def load_path_csv(path) -> MonotonePath:
    """Read a ``t,x`` (or ``t,x0,x1,...``) CSV into a path."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    cols = data.dtype.names
    if cols[0] != "t" or len(cols) < 2:
        raise ValueError(f"{path}: expected header t,x or t,x0,x1,...")
    values = np.column_stack([data[c] for c in cols[1:]])
    return MonotonePath(np.atleast_1d(data["t"]), values[:, 0] if values.shape[1] == 1 else values)


@dataclass(frozen=True)
class RateFunction:
    """Interest rate ``r(t, x)``, nonincreasing in ``t`` and in each ``x_j``.

    ``r_plus_integrable`` declares that the positive part of the rate is
    integrable on ``[0, inf)``; this cannot be checked on a finite grid.
    """

    r: Callable
    r_plus_integrable: bool = False
    name: str = "custom"

    def __call__(self, t, x):
        return float(self.r(t, x))


def constant_rate(value: float, r_plus_integrable: bool = False) -> RateFunction:
    value = float(value)
    return RateFunction(lambda t, x: value, r_plus_integrable, "constant")


def rate_from_table(t_grid, values, r_plus_integrable: bool = False) -> RateFunction:
    """Step rate in time (independent of ``x``); values must not increase."""
    t_grid = as_grid(t_grid, "t_grid")
    values = np.asarray(values, dtype=float)
    if values.shape != t_grid.shape:
        raise ValueError("rate table values must match t_grid")
    k = first_decrease(-values)
    if k is not None:
        raise ValueError(f"rate increases at table index {k}")

    def r(t, x):
        return values[max(int(np.searchsorted(t_grid, t, side="right")) - 1, 0)]

    return RateFunction(r, r_plus_integrable, "table")


def check_rate(rate: RateFunction, d: int = 1, n: int = 1000, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    for _ in range(n):
        t, x = rng.uniform(0, 5), rng.uniform(-1, 1, d)
        base = rate(t, x)
        if rate(t + rng.uniform(0, 1), x) > base + 1e-12 or rate(t, x + rng.uniform(0, 1, d)) > base + 1e-12:
            raise ValueError(f"rate increases near t={t}, x={x}")


@dataclass(frozen=True)
class IntegrabilityResult:
    ok: bool
    first_crossing: float


def check_integrability(model: IntensityModel, rate: RateFunction, x_path: MonotonePath,
                        y_path: MonotonePath, rho_path: MonotonePath, horizon: float,
                        r_plus_integrable: Optional[bool] = None) -> IntegrabilityResult:
    """First grid time with ``gamma - r >= 0`` and whether the stopping problem is well posed.

    Well posed means the crossing happens by ``horizon`` or the rate declares
    ``r_plus_integrable``.
    """
    grid = x_path.grid
    for name, p in (("y_path", y_path), ("rho_path", rho_path)):
        if p.grid.shape != grid.shape or np.any(p.grid != grid):
            raise ValueError(f"{name} does not share the common-noise grid")
    declared = rate.r_plus_integrable if r_plus_integrable is None else r_plus_integrable
    first = np.inf
    for k, t in enumerate(grid):
        if t > horizon:
            break
        x = x_path.values[k]
        gamma = float(model.g(t, x, y_path.values[k], rho_path.values[k]))
        if gamma - rate(t, x) >= 0:
            first = float(t)
            break
    return IntegrabilityResult(bool(first <= horizon or declared), first)


# named time functions used by scenarios for shifts a(t) and common-noise paths

def linear_function(slope: float = 1.0, x0: float = 0.0, cap: float = np.inf):
    return lambda t: min(x0 + slope * t, cap)


def power_function(exponent: float = 2.0, scale: float = 1.0, cap: float = np.inf):
    return lambda t: min(scale * t ** exponent, cap)


def step_function(T: float, low: float = 0.0, high: float = 2.0):
    return lambda t: high if t >= T else low


def zero_function():
    return lambda t: 0.0
