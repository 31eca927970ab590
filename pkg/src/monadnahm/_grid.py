"""Finite differences, smooth steps and matrix transport on 1D grids."""
from __future__ import annotations

from math import comb

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import betainc
from scipy.interpolate import make_interp_spline

from .errors import NonConvergenceError


def fornberg_weights(nodes: np.ndarray, x0: float, order: int = 1) -> np.ndarray:
    """Weights w with sum(w * f(nodes)) ≈ f^(order)(x0)."""
    n = len(nodes)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, nodes[i] - x0
        for jj in range(i):
            c3 = nodes[i] - nodes[jj]
            c2 *= c3
            if jj == i - 1:
                for m in range(mn, 0, -1):
                    c[i, m] = c1 * (m * c[i - 1, m - 1] - c5 * c[i - 1, m]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for m in range(mn, 0, -1):
                c[jj, m] = (c4 * c[jj, m] - m * c[jj, m - 1]) / c3
            c[jj, 0] = c4 * c[jj, 0] / c3
        c1 = c2
    return c[:, order]


def derivative(x: np.ndarray, f: np.ndarray, points: int = 9) -> np.ndarray:
    """df/dx along axis 0 with ``points``-point stencils (one-sided at the ends)."""
    n = len(x)
    p = min(points, n)
    half = p // 2
    out = np.empty_like(f)
    for i in range(n):
        lo = min(max(i - half, 0), n - p)
        w = fornberg_weights(x[lo:lo + p], x[i])
        out[i] = np.tensordot(w, f[lo:lo + p], axes=(0, 0))
    return out


def polynomial_step(x, order: int = 7):
    """Smoothstep of degree 2·order+1: derivatives up to ``order`` vanish at 0 and 1.

    Evaluated as the regularized incomplete beta function I_x(order+1, order+1),
    which avoids the cancellation of the expanded polynomial near x = 1.
    Returns (value, derivative); clamped to 0 and 1 outside [0, 1].
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    m = order
    val = betainc(m + 1, m + 1, x)
    der = (2 * m + 1) * comb(2 * m, m) * x**m * (1 - x) ** m
    return val, der


def transport(x: np.ndarray, generator: np.ndarray, rtol: float = 1e-12,
              atol: float = 1e-13) -> np.ndarray:
    """T(x[-1] <- x[0]) for dT/dx = generator(x) @ T, generator given on nodes.

    The generator is interpolated by a quintic spline (cubic if too few nodes).
    """
    n = generator.shape[1]
    kdeg = 5 if len(x) > 5 else max(1, len(x) - 1)
    spl = make_interp_spline(x, generator.reshape(len(x), -1), k=kdeg)

    def rhs(s, y):
        return (spl(s).reshape(n, n) @ y.reshape(n, n)).ravel()

    sol = solve_ivp(rhs, (x[0], x[-1]), np.eye(n, dtype=complex).ravel(),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NonConvergenceError(f"transport integration failed: {sol.message}",
                                  trace=[("nfev", sol.nfev), ("t_reached", float(sol.t[-1]))])
    return sol.y[:, -1].reshape(n, n)
