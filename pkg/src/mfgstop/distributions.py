"""Time-indexed c.d.f. families for the idiosyncratic signal.

A family is ``y -> F_t(y) = P(Y_t <= y)``. Families here describe increasing
signals, so ``t -> F_t(y)`` is nonincreasing, and they must be continuous in
``y`` (atoms break the fixed-point characterisation of equilibria).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ._validation import as_grid

ATOM_PROBE = 1e-6
ATOM_JUMP = 1e-4


@dataclass(frozen=True)
class TimeIndexedCdf:
    """Continuous c.d.f. family with inverse-c.d.f. sampling.

    ``eval(t, y)`` and ``sample(t, p)`` take a scalar time and broadcast over
    ``y`` / ``p``. ``support_hint(t)`` returns a finite ``(lo, hi)`` with
    ``F_t(lo) = 0`` and ``F_t(hi) = 1``; it is used to bracket searches.
    ``density`` is optional and only feeds the uniqueness diagnostic.
    """

    eval: Callable[[float, np.ndarray], np.ndarray]
    sample: Callable[[float, np.ndarray], np.ndarray]
    support_hint: Callable[[float], tuple]
    density: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def sample_paths(self, grid, p) -> np.ndarray:
        """Comonotone signal paths ``Y[i, k] = F_{t_k}^{-1}(p_i)``.

        With one uniform ``p_i`` per agent the paths are nondecreasing in
        time because ``F_t`` decreases in ``t``; for shifted families this is
        exactly ``U_i + a(t_k)``.
        """
        p = np.asarray(p, dtype=float)
        return np.stack([np.asarray(self.sample(float(t), p), dtype=float) for t in grid], axis=-1)


class _PiecewiseLinear:
    """Continuous piecewise-linear c.d.f. through ``(ys[k], fs[k])``."""

    def __init__(self, ys, fs):
        self.ys = np.asarray(ys, dtype=float)
        self.fs = np.asarray(fs, dtype=float)
        self.slopes = np.diff(self.fs) / np.diff(self.ys)

    def cdf(self, y):
        return np.interp(y, self.ys, self.fs, left=self.fs[0], right=self.fs[-1])

    def quantile(self, p):
        # generalized inverse: smallest y with F(y) >= p
        p = np.asarray(p, dtype=float)
        idx = np.clip(np.searchsorted(self.fs, p, side="left"), 1, len(self.fs) - 1)
        f0, f1 = self.fs[idx - 1], self.fs[idx]
        y0, y1 = self.ys[idx - 1], self.ys[idx]
        span = np.where(f1 > f0, f1 - f0, 1.0)
        out = y0 + (y1 - y0) * np.clip((p - f0) / span, 0.0, 1.0)
        return np.where(p <= self.fs[0], self.ys[0], out)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.ys, y, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.slopes))
        return np.where(inside, self.slopes[np.clip(idx, 0, len(self.slopes) - 1)], 0.0)


def _check_shift(a, probe=None) -> None:
    probe = np.linspace(0.0, 10.0, 1001) if probe is None else probe
    vals = np.array([float(a(t)) for t in probe])
    if abs(vals[0]) > 1e-12:
        raise ValueError(f"shift must satisfy a(0) = 0, got a(0) = {vals[0]!r}")
    bad = np.nonzero(np.diff(vals) < 0)[0]
    if bad.size:
        k = int(bad[0])
        raise ValueError(f"shift is not increasing: a({probe[k + 1]:g}) < a({probe[k]:g})")


def _shifted(base: _PiecewiseLinear, a, name: str, params: dict) -> TimeIndexedCdf:
    lo, hi = base.ys[0], base.ys[-1]
    return TimeIndexedCdf(
        eval=lambda t, y: base.cdf(np.asarray(y, dtype=float) - float(a(t))),
        sample=lambda t, p: base.quantile(p) + float(a(t)),
        support_hint=lambda t: (lo + float(a(t)), hi + float(a(t))),
        density=lambda t, y: base.pdf(np.asarray(y, dtype=float) - float(a(t))),
        name=name,
        params=params,
    )


def uniform_shifted_family(r: float, a: Callable[[float], float], probe=None) -> TimeIndexedCdf:
    """Family of ``Y_t = U + a(t)`` with ``U`` uniform on ``[r - 1, r]``.

    ``F_t(y) = clamp(1 + y - a(t) - r, 0, 1)``.
    """
    _check_shift(a, probe)
    base = _PiecewiseLinear([r - 1.0, r], [0.0, 1.0])
    return _shifted(base, a, "uniform", {"r": r})


def three_mass_family(eps: float, a: Callable[[float], float], probe=None) -> TimeIndexedCdf:
    """Family of ``Y_t = U + a(t)`` where ``U`` on ``[0, 1]`` has three blocks.

    Mass ``eps`` uniform on ``[0, eps]`` and on ``[1 - eps, 1]``, mass
    ``1 - 2 eps`` uniform on ``[1/2 - eps, 1/2 + eps]``.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError(f"eps must lie in (0, 1/4), got {eps!r}")
    _check_shift(a, probe)
    ys = [0.0, eps, 0.5 - eps, 0.5 + eps, 1.0 - eps, 1.0]
    fs = [0.0, eps, eps, 1.0 - eps, 1.0 - eps, 1.0]
    return _shifted(_PiecewiseLinear(ys, fs), a, "three-mass", {"eps": eps})


def cdf_from_table(t_grid, y_grid, values) -> TimeIndexedCdf:
    """Family interpolated linearly in ``y`` and stepwise (càdlàg) in ``t``.

    ``values[k, j] = F_{t_k}(y_j)``. Every row must start at 0 and end at 1 so
    the interpolant is a continuous c.d.f.; times before ``t_grid[0]`` use the
    first row.
    """
    t_grid = as_grid(t_grid, "t_grid")
    y_grid = as_grid(y_grid, "y_grid")
    values = np.asarray(values, dtype=float)
    if y_grid.size < 2:
        raise ValueError("y_grid needs at least two columns to define a continuous c.d.f.")
    if values.shape != (t_grid.size, y_grid.size):
        raise ValueError(f"values has shape {values.shape}, expected {(t_grid.size, y_grid.size)}")
    out = np.argwhere((values < 0) | (values > 1) | ~np.isfinite(values))
    if out.size:
        k, j = out[0]
        raise ValueError(f"value outside [0, 1] at (t index {k}, y index {j}): {values[k, j]!r}")
    dy = np.argwhere(np.diff(values, axis=1) < 0)
    if dy.size:
        k, j = dy[0]
        raise ValueError(f"values decrease in y at (t index {k}, y index {j + 1})")
    dt = np.argwhere(np.diff(values, axis=0) > 0)
    if dt.size:
        k, j = dt[0]
        raise ValueError(f"values increase in t at (t index {k + 1}, y index {j})")
    ends = np.nonzero((values[:, 0] != 0.0) | (values[:, -1] != 1.0))[0]
    if ends.size:
        raise ValueError(f"row at t index {ends[0]} must start at 0 and end at 1")

    rows = [_PiecewiseLinear(y_grid, row) for row in values]

    def row(t):
        return rows[max(int(np.searchsorted(t_grid, t, side="right")) - 1, 0)]

    def support(t):
        pl = row(t)
        lo = pl.ys[max(int(np.searchsorted(pl.fs, 0.0, side="right")) - 1, 0)]
        hi = pl.ys[int(np.searchsorted(pl.fs, 1.0, side="left"))]
        return (float(lo), float(hi))

    return TimeIndexedCdf(
        eval=lambda t, y: row(t).cdf(y),
        sample=lambda t, p: row(t).quantile(p),
        support_hint=support,
        density=lambda t, y: row(t).pdf(y),
        name="table",
        params={"t_grid": t_grid, "y_grid": y_grid},
    )


def load_cdf_csv(path) -> TimeIndexedCdf:
    """Read a ``t,y,F`` CSV (rows sorted by ``(t, y)``) into a table family."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["t", "y", "F"]:
            raise ValueError(f"{path}: expected header t,y,F, got {','.join(header)}")
        rows = [tuple(float(v) for v in line) for line in reader if line]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    if any(rows[k][:2] >= rows[k + 1][:2] for k in range(len(rows) - 1)):
        raise ValueError(f"{path}: rows must be strictly sorted by (t, y)")
    t_grid = np.unique(data[:, 0])
    y_grid = np.unique(data[:, 1])
    if data.shape[0] != t_grid.size * y_grid.size:
        raise ValueError(f"{path}: table is not a full (t, y) grid")
    return cdf_from_table(t_grid, y_grid, data[:, 2].reshape(t_grid.size, y_grid.size))


def _find_atom(cdf, t, ys, f):
    # zoom into every coarse cell with a large increment, keeping the steeper half
    for k in np.flatnonzero(np.diff(f) > ATOM_JUMP):
        a, b = float(ys[k]), float(ys[k + 1])
        fa, fb = float(f[k]), float(f[k + 1])
        while b - a > ATOM_PROBE:
            m = 0.5 * (a + b)
            fm = float(cdf.eval(t, m))
            if fm - fa >= fb - fm:
                b, fb = m, fm
            else:
                a, fa = m, fm
        if fb - fa > ATOM_JUMP:
            return 0.5 * (a + b)
    return None


def check_family(cdf: TimeIndexedCdf, times, n_probe: int = 200) -> None:
    """Probe a family for monotonicity, atoms and quantile round-trip.

    Raises ``ValueError`` describing the first violation found.
    """
    times = np.asarray(times, dtype=float)
    supports = [cdf.support_hint(float(t)) for t in times]
    for t, (lo, hi) in zip(times, supports):
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"support_hint at t={t:g} must be a finite interval, got {(lo, hi)}")
    lo = min(s[0] for s in supports)
    hi = max(s[1] for s in supports)
    ys = np.linspace(lo - 0.1 * (hi - lo), hi + 0.1 * (hi - lo), n_probe)
    ps = np.linspace(0.01, 0.99, 50)
    prev = None
    for t in times:
        t = float(t)
        f = np.asarray(cdf.eval(t, ys), dtype=float)
        if np.any(np.diff(f) < -1e-15) or f.min() < 0 or f.max() > 1:
            raise ValueError(f"F_t is not a c.d.f. at t={t:g}")
        if f[0] > 1e-12 or f[-1] < 1 - 1e-12:
            raise ValueError(f"support_hint at t={t:g} does not cover the transition of F_t")
        atom = _find_atom(cdf, t, ys, f)
        if atom is not None:
            raise ValueError(f"F_t has an atom near y={atom:g} at t={t:g}")
        rt = np.asarray(cdf.eval(t, cdf.sample(t, ps)))
        if np.max(np.abs(rt - ps)) > 1e-9:
            raise ValueError(f"quantile round-trip fails at t={t:g}")
        if prev is not None and np.any(f > prev + 1e-15):
            raise ValueError(f"F_t increases in t at t={t:g}")
        prev = f


def custom_family(eval, sample, support_hint, density=None, probe_times=None, name="custom") -> TimeIndexedCdf:
    """Wrap user callables as a family after probing them with ``check_family``."""
    cdf = TimeIndexedCdf(eval=eval, sample=sample, support_hint=support_hint, density=density, name=name)
    check_family(cdf, np.linspace(0.0, 10.0, 21) if probe_times is None else probe_times)
    return cdf
