"""Brute-force zero finder used as an independent oracle.

The c.d.f.s are written out in closed form here, separately from the
package, and ``G`` is scanned on a dense uniform grid of ``u``.
"""
import numpy as np


def uniform_cdf_u(y, r):
    """U uniform on [r - 1, r]."""
    return np.clip(np.asarray(y, dtype=float) - (r - 1.0), 0.0, 1.0)


def three_mass_cdf_u(y, eps):
    y = np.asarray(y, dtype=float)
    mid_lo = 0.5 - eps
    out = np.zeros_like(y)
    out = np.where(y >= 0, np.minimum(y, eps), out)
    out = np.where(y >= mid_lo, eps + (1 - 2 * eps) * np.minimum(y - mid_lo, 2 * eps) / (2 * eps), out)
    out = np.where(y >= 1 - eps, 1 - eps + np.minimum(y - (1 - eps), eps), out)
    return np.clip(out, 0.0, 1.0)


def G_additive(cdf_u, shift, c, x, r):
    """G(u) = F_U(r - x - c u - a(t)) - 1 + u for Y_t = U + a(t)."""
    return lambda u: cdf_u(r - x - c * u - shift) - 1.0 + u


def scan(G, n=10**6, zero_tol=1e-12):
    """Zeros of G on [0, 1]: sign changes and runs of exact grid zeros.

    Returns ``(changes, zero_runs)``: ``changes`` lists fine cells
    ``(u_j, u_{j+1})`` with a strict sign change; ``zero_runs`` lists
    ``(u_start, u_stop)`` runs with ``|G| <= zero_tol``.
    """
    u = np.linspace(0.0, 1.0, n + 1)
    g = G(u)
    is_zero = np.abs(g) <= zero_tol
    padded = np.concatenate(([0], is_zero.astype(np.int8), [0]))
    d = np.diff(padded)
    starts, stops = np.nonzero(d == 1)[0], np.nonzero(d == -1)[0] - 1
    runs = [(u[a], u[b]) for a, b in zip(starts, stops)]
    s = np.sign(g)
    idx = np.nonzero((~is_zero[:-1]) & (~is_zero[1:]) & (s[:-1] * s[1:] < 0))[0]
    changes = [(u[k], u[k + 1]) for k in idx]
    return changes, runs


def count_zeros(G, n=10**6):
    """Number of zero components: sign changes plus exact-zero runs."""
    changes, runs = scan(G, n)
    return len(changes) + len(runs)
