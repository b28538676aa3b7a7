"""scikit-learn style front end for the equilibrium solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .distributions import three_mass_family, uniform_shifted_family
from .equilibrium import (DEFAULT_RESOLUTION, DEFAULT_TOL_FLAT, DEFAULT_TOL_ROOT, build_curve,
                          pointwise_residual, solve_all)
from .model import MonotonePath, additive_model, constant_rate, linear_function, zero_function
from .population import PopulationConfig, simulate

_SHIFTS = {"linear": linear_function, "zero": zero_function}


class MeanFieldStoppingEquilibrium(TransformerMixin, BaseEstimator):
    """Equilibrium stopped proportion for the additive intensity model.

    ``X`` rows are ``(t, x_1, ..., x_d)``: a time and the common-noise value
    at that time (a 1-d ``X`` is read as times with ``x = 0``). ``fit`` takes
    a path (times strictly increasing, noise nondecreasing) and builds the
    equilibrium curve along it.

    Parameters
    ----------
    family : {"uniform", "three-mass"}
        Distribution of the idiosyncratic signal ``U``.
    r : float
        Constant interest rate; the uniform signal lives on ``[r - 1, r]``.
    c : float
        Interaction strength.
    eps : float
        Block width for ``family="three-mass"``.
    shift : {"linear", "zero"} or callable
        Deterministic drift ``a(t)`` of the signal, ``Y_t = U + a(t)``.
    policy : str or array-like
        Branch selection, see ``build_curve``.
    """

    def __init__(self, family="uniform", r=1.0, c=0.5, eps=0.1, shift="linear", policy="maximal",
                 resolution=DEFAULT_RESOLUTION, tol_root=DEFAULT_TOL_ROOT, tol_flat=DEFAULT_TOL_FLAT, n_jobs=1):
        self.family = family
        self.r = r
        self.c = c
        self.eps = eps
        self.shift = shift
        self.policy = policy
        self.resolution = resolution
        self.tol_root = tol_root
        self.tol_flat = tol_flat
        self.n_jobs = n_jobs

    def _components(self):
        a = self.shift if callable(self.shift) else _SHIFTS[self.shift]()
        if self.family == "uniform":
            cdf = uniform_shifted_family(self.r, a)
        elif self.family == "three-mass":
            cdf = three_mass_family(self.eps, a)
        else:
            raise ValueError(f"unknown family {self.family!r}")
        return cdf, additive_model(self.c), constant_rate(self.r)

    @staticmethod
    def _split(X):
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        t = X[:, 0]
        x = X[:, 1:] if X.shape[1] > 1 else np.zeros((X.shape[0], 1))
        return X, t, x

    def fit(self, X, y=None):
        X, t, x = self._split(X)
        self.n_features_in_ = X.shape[1]
        self.cdf_, self.model_, self.rate_ = self._components()
        path = MonotonePath(t, x[:, 0] if x.shape[1] == 1 else x)
        self.curve_ = build_curve(self.cdf_, self.model_, self.rate_, path, self.policy, self.resolution,
                                  self.tol_root, self.tol_flat, self.n_jobs)
        return self

    def _solve_rows(self, X):
        check_is_fitted(self, "curve_")
        X, t, x = self._split(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, fitted with {self.n_features_in_}")
        return t, x, [solve_all(self.cdf_, self.model_, ti, xi, self.rate_(ti, xi), self.resolution,
                                self.tol_root, self.tol_flat) for ti, xi in zip(t, x)]

    def predict(self, X):
        """Stopped proportion at each ``(t, x)``.

        Maximal and minimal policies are functions of ``(t, x)`` and are
        re-solved per row; other policies read the fitted curve at ``t``.
        """
        if isinstance(self.policy, str) and self.policy in ("maximal", "minimal"):
            _, _, sets = self._solve_rows(X)
            return np.array([getattr(s, self.policy) for s in sets])
        check_is_fitted(self, "curve_")
        _, t, _ = self._split(X)
        return np.asarray(self.curve_(t), dtype=float)

    def transform(self, X):
        """Columns ``(rho_min, rho_max, n_components)`` of the solution set per row."""
        _, _, sets = self._solve_rows(X)
        return np.array([[s.minimal, s.maximal, len(s.isolated_roots) + len(s.flat_intervals)] for s in sets])

    def score(self, X, y=None):
        """Negative worst fixed-point residual of ``predict(X)``."""
        _, t, x = self._split(X)
        u = self.predict(X)
        return -max(pointwise_residual(self.cdf_, self.model_, ti, xi, self.rate_(ti, xi), ui)
                    for ti, xi, ui in zip(t, x, u))

    def simulate(self, n_agents: int, master_seed: int = 0):
        """Finite-population check of the fitted curve."""
        check_is_fitted(self, "curve_")
        path = MonotonePath(self.curve_.grid, self.curve_.x)
        cfg = PopulationConfig(n_agents, master_seed, self.cdf_, self.model_, self.rate_, path)
        return simulate(cfg, self.curve_)
