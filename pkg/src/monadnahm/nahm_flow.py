"""Discretized Nahm equations on the circle (j = 0) and the hermitian gauge flow.

Time ``t`` is the variable of the equations

    dβ/dt + [α, β] = 0                                 (complex)
    d(α + α*)/dt + [α, α*] + [β, β*] = 0               (real)

which for a complex built with gauge factor c is t = θ/c.  Both intervals carry
rank k; the two junctions are shared grid nodes where β jumps by a rank-one
matrix u·w.  Residuals are evaluated at interior nodes only.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._grid import fornberg_weights
from .errors import NonConvergenceError, StructuralError


@dataclass(frozen=True, eq=False)
class DiscretizedNahm:
    grid_small: np.ndarray
    alpha_small: np.ndarray
    beta_small: np.ndarray
    grid_big: np.ndarray
    alpha_big: np.ndarray
    beta_big: np.ndarray
    u0: np.ndarray
    w0: np.ndarray
    uinf: np.ndarray
    winf: np.ndarray
    period: float
    time_scale: float = 1.0  # θ = time_scale · t

    def __post_init__(self):
        for name in ("grid_small", "grid_big"):
            g = np.asarray(getattr(self, name), dtype=float)
            if g.ndim != 1 or len(g) < 4 or np.any(np.diff(g) <= 0):
                raise StructuralError(f"{name} must be strictly increasing with at least 4 points", name)
            object.__setattr__(self, name, g)
        k = None
        for name in ("alpha_small", "beta_small", "alpha_big", "beta_big"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            grid = self.grid_small if name.endswith("small") else self.grid_big
            if arr.ndim != 3 or arr.shape[0] != len(grid) or arr.shape[1] != arr.shape[2]:
                raise StructuralError(f"{name} must have shape (len(grid), k, k)", name)
            if k is not None and arr.shape[1] != k:
                raise StructuralError("rank must be the same on both intervals", name)
            k = arr.shape[1]
            object.__setattr__(self, name, arr)
        if not np.isclose(self.grid_big[0], self.grid_small[-1], rtol=0, atol=1e-12 * self.period):
            raise StructuralError("long interval must start where the short one ends", "grid_big")
        if not np.isclose(self.grid_big[-1], self.grid_small[0] + self.period, rtol=0,
                          atol=1e-12 * self.period):
            raise StructuralError("intervals must close up around the circle", "grid_big")
        for name in ("u0", "uinf"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex).reshape(k, 1))
        for name in ("w0", "winf"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex).reshape(1, k))

    @property
    def k(self) -> int:
        return self.alpha_small.shape[1]

    def intervals(self):
        return ((self.grid_small, self.alpha_small, self.beta_small),
                (self.grid_big, self.alpha_big, self.beta_big))


def from_nahm_complex(ncd) -> DiscretizedNahm:
    """Rescale a j = 0 Nahm complex to the equations' time t = θ/c."""
    if ncd.j != 0:
        raise StructuralError("the flow handles j = 0 only; pole boundary conditions are out of scope", "j")
    c = ncd.gauge_factor
    ex = ncd.extra
    return DiscretizedNahm(
        ncd.theta_small / c, ncd.alpha_small, ncd.beta_small,
        ncd.theta_big / c, ncd.alpha_big, ncd.beta_big,
        ex["u0"], ex["w0"], ex["uinf"], ex["winf"], 2 * np.pi / c, c,
    )


# ---------------------------------------------------------------- residuals

def derivative_matrix(grid: np.ndarray) -> sp.csr_matrix:
    """Second-order differences: central inside, one-sided at both ends."""
    n = len(grid)
    rows, cols, vals = [], [], []
    for i in range(n):
        lo = 0 if i == 0 else (n - 3 if i == n - 1 else i - 1)
        w = fornberg_weights(grid[lo:lo + 3], grid[i])
        rows += [i] * 3
        cols += list(range(lo, lo + 3))
        vals += list(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _stencils(grid):
    n = len(grid)
    lo = np.clip(np.arange(n) - 1, 0, n - 3)
    W = np.array([fornberg_weights(grid[l:l + 3], grid[i]) for i, l in enumerate(lo)])
    return lo, W


def _d(grid, F):
    # weighted differences f_j - f_i so constants differentiate to exactly zero
    lo, W = _stencils(grid)
    idx = np.arange(len(grid))
    out = np.zeros_like(F)
    for m in range(3):
        w = W[:, m].reshape((-1,) + (1,) * (F.ndim - 1))
        out = out + w * (F[lo + m] - F[idx])
    return out


def _comm(X, Y):
    return X @ Y - Y @ X


def _dagger(X):
    return np.conj(np.swapaxes(X, -1, -2))


def moment_map(grid, alpha, beta) -> np.ndarray:
    """d(α+α*)/dt + [α, α*] + [β, β*] at every node."""
    return _d(grid, alpha + _dagger(alpha)) + _comm(alpha, _dagger(alpha)) + _comm(beta, _dagger(beta))


def _maxnorm(X) -> float:
    """Largest spectral norm over a stack of matrices."""
    return float(np.linalg.norm(X, 2, axis=(-2, -1)).max()) if X.size else 0.0


def complex_residual(d: DiscretizedNahm) -> float:
    """max over interior nodes of the spectral norm of dβ/dt + [α, β]."""
    worst = 0.0
    for grid, a, b in d.intervals():
        r = _d(grid, b) + _comm(a, b)
        worst = max(worst, _maxnorm(r[1:-1]))
    return worst


def real_residual(d: DiscretizedNahm) -> float:
    """max over interior nodes of the spectral norm of d(α+α*)/dt + [α,α*] + [β,β*]."""
    return max(_maxnorm(moment_map(g, a, b)[1:-1]) for g, a, b in d.intervals())


def _interior_weights(grid):
    w = np.zeros(len(grid))
    h = np.diff(grid)
    w[:-1] += h / 2
    w[1:] += h / 2
    w[0] = w[-1] = 0.0
    return w


def energy(d: DiscretizedNahm) -> float:
    """Trapezoidal ∫‖μ‖²_F, with μ counted at interior nodes (so energy = 0 ⇔ real_residual = 0)."""
    total = 0.0
    for grid, a, b in d.intervals():
        mu = moment_map(grid, a, b)
        total += float(np.sum(_interior_weights(grid) * np.sum(np.abs(mu) ** 2, axis=(1, 2))))
    return total


# ---------------------------------------------------------------- hermitian gauge

def hermitian_basis(k: int) -> np.ndarray:
    """Columns: row-major vecs of an orthonormal real basis of k×k hermitian matrices."""
    cols = []
    for p in range(k):
        E = np.zeros((k, k), dtype=complex)
        E[p, p] = 1
        cols.append(E.ravel())
    for p in range(k):
        for q in range(p + 1, k):
            E = np.zeros((k, k), dtype=complex)
            E[p, q] = E[q, p] = 1 / np.sqrt(2)
            cols.append(E.ravel())
            F = np.zeros((k, k), dtype=complex)
            F[p, q], F[q, p] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            cols.append(F.ravel())
    return np.array(cols).T


def _n_unknowns(d: DiscretizedNahm) -> int:
    return len(d.grid_small) + len(d.grid_big) - 2


def _node_maps(d: DiscretizedNahm):
    """Unknown index of every node of each interval (junctions shared)."""
    ns, nb = len(d.grid_small), len(d.grid_big)
    small = np.arange(ns)
    big = np.concatenate([[ns - 1], ns + np.arange(nb - 2), [0]])
    return small, big


def hermitian_fields(d: DiscretizedNahm, x: np.ndarray):
    """Per-node hermitian matrices on each interval from real coordinates x."""
    k = d.k
    Bh = hermitian_basis(k)
    H = (x.reshape(-1, k * k) @ Bh.T).reshape(-1, k, k)
    small, big = _node_maps(d)
    return H[small], H[big]


def gauge_coordinates(d: DiscretizedNahm, xi_small, xi_big) -> np.ndarray:
    """Inverse of hermitian_fields; junction values are taken from the short side."""
    k = d.k
    Bh = hermitian_basis(k)
    small, big = _node_maps(d)
    H = np.zeros((_n_unknowns(d), k, k), dtype=complex)
    H[big] = xi_big
    H[small] = xi_small
    return np.real(H.reshape(len(H), -1) @ np.conj(Bh)).ravel()


def _exp_hermitian(xi, dxi):
    """g = exp(ξ) and ġg⁻¹ for hermitian ξ with derivative ξ̇, via eigen-decomposition."""
    lam, V = np.linalg.eigh(xi)
    Vh = _dagger(V)
    e = np.exp(lam)
    g = (V * e[:, None, :]) @ Vh
    ginv = (V / e[:, None, :]) @ Vh
    la, lb = lam[:, :, None], lam[:, None, :]
    diff = la - lb
    close = np.abs(diff) < 1e-8
    dd = np.where(close, np.exp((la + lb) / 2), (np.exp(la) - np.exp(lb)) / np.where(close, 1.0, diff))
    gdot = V @ ((Vh @ dxi @ V) * dd) @ Vh
    return g, ginv, gdot @ ginv


def apply_hermitian_gauge(d: DiscretizedNahm, x: np.ndarray) -> DiscretizedNahm:
    """Act by g = exp(ξ) with ξ given by real coordinates x; jump factors move covariantly."""
    xs, xb = hermitian_fields(d, x)
    out = {}
    gs = {}
    for tag, xi, (grid, a, b) in (("small", xs, d.intervals()[0]), ("big", xb, d.intervals()[1])):
        g, ginv, gdg = _exp_hermitian(xi, _d(grid, xi))
        out[f"alpha_{tag}"] = g @ a @ ginv - gdg
        out[f"beta_{tag}"] = g @ b @ ginv
        gs[tag] = (g, ginv)
    g0, g0inv = gs["small"][0][0], gs["small"][1][0]
    gi, giinv = gs["small"][0][-1], gs["small"][1][-1]
    return replace(d, **out, u0=g0 @ d.u0, w0=d.w0 @ g0inv, uinf=gi @ d.uinf, winf=d.winf @ giinv)


def _ad(X):
    """Row-major matrix of ξ ↦ [ξ, X]."""
    k = X.shape[0]
    I = np.eye(k)
    return np.kron(I, X.T) - np.kron(X, I)


def _jacobian(d: DiscretizedNahm):
    """Real Jacobian of interior μ (hermitian coordinates) w.r.t. the gauge coordinates, and weights."""
    k = d.k
    k2 = k * k
    Bh = hermitian_basis(k)
    blocks, weights, mus = [], [], []
    for (grid, a, b), nodes in zip(d.intervals(), _node_maps(d)):
        n = len(grid)
        D = sp.kron(derivative_matrix(grid), sp.identity(k2), format="csr")
        ad_s, c_s = [], []
        for ai, bi in zip(a, b):
            ah, bh = ai.conj().T, bi.conj().T
            ad_s.append(_ad(ai - ah))
            c_s.append(_ad(ah) @ _ad(ai) + _ad(ai) @ _ad(ah) + _ad(bh) @ _ad(bi) + _ad(bi) @ _ad(bh))
        Ad = sp.block_diag(ad_s, format="csr")
        C = sp.block_diag(c_s, format="csr")
        Jc = D @ Ad - 2 * (D @ D) + Ad @ D + C
        Q = _basis_block(Bh, n)
        Jr = (Q.conj().T @ Jc @ Q).real
        interior = np.arange(k2, (n - 1) * k2)
        Jr = Jr[interior]
        sel = sp.csr_matrix((np.ones(n * k2), (np.arange(n * k2),
                             (nodes[:, None] * k2 + np.arange(k2)[None, :]).ravel())),
                            shape=(n * k2, _n_unknowns(d) * k2))
        blocks.append(Jr @ sel)
        weights.append(np.repeat(_interior_weights(grid)[1:-1], k2))
        mu = moment_map(grid, a, b)[1:-1]
        mus.append(np.real(mu.reshape(len(mu), -1) @ np.conj(Bh)).ravel())
    return sp.vstack(blocks, format="csr"), np.concatenate(weights), np.concatenate(mus)


def energy_gradient(d: DiscretizedNahm) -> np.ndarray:
    """∂E/∂x at x = 0 for the action of exp(ξ(x)), in gauge coordinates."""
    J, w, mu = _jacobian(d)
    return 2 * (J.T @ (w * mu))


def _hermitian_part_rows(d, interval: int, i: int):
    """Value and linearization of α + α* at node i of an interval, in hermitian coordinates."""
    k2 = d.k ** 2
    Bh = hermitian_basis(d.k)
    grid, a, _ = d.intervals()[interval]
    nodes = _node_maps(d)[interval]
    drow = derivative_matrix(grid).getrow(i).tocoo()
    L = np.zeros((k2, _n_unknowns(d) * k2), dtype=complex)
    for col, wgt in zip(drow.col, drow.data):
        L[:, nodes[col] * k2:(nodes[col] + 1) * k2] -= 2 * wgt * np.eye(k2)
    L[:, nodes[i] * k2:(nodes[i] + 1) * k2] += _ad(a[i] - a[i].conj().T)
    value = np.real(np.conj(Bh).T @ (a[i] + a[i].conj().T).ravel())
    return value, np.real(np.conj(Bh).T @ L @ _basis_block(Bh, _n_unknowns(d)))


def _basis_block(Bh, n):
    return sp.kron(sp.identity(n), Bh, format="csr")


def _junction_rows(d: DiscretizedNahm):
    """Continuity of α + α* across both junctions (residual and Jacobian)."""
    ns, nb = len(d.grid_small), len(d.grid_big)
    vals, rows = [], []
    for (ia, i), (ib, j) in (((0, ns - 1), (1, 0)), ((1, nb - 1), (0, 0))):
        va, ra = _hermitian_part_rows(d, ia, i)
        vb, rb = _hermitian_part_rows(d, ib, j)
        vals.append(va - vb)
        rows.append(ra - rb)
    return np.concatenate(vals), sp.csr_matrix(np.vstack(rows))


def _newton_direction(d: DiscretizedNahm) -> np.ndarray:
    J, w, mu = _jacobian(d)
    # junction rows get the weight of a typical interior node
    rc, Jc = _junction_rows(d)
    wc = np.full(len(rc), float(np.median(w[w > 0])))
    J = sp.vstack([J, Jc], format="csr")
    w = np.concatenate([w, wc])
    mu = np.concatenate([mu, rc])
    Wj = sp.diags(w) @ J
    A = (J.T @ Wj).tocsc()
    lam = 1e-13 * max(1.0, float(A.diagonal().max()))
    A = A + lam * sp.identity(A.shape[0], format="csc")
    lu = spla.splu(A)
    rhs = -(J.T @ (w * mu))
    x = lu.solve(rhs)
    for _ in range(2):  # iterative refinement
        x += lu.solve(rhs - A @ x)
    return x


@dataclass
class FlowTrace:
    energy: list = field(default_factory=list)
    real_residual: list = field(default_factory=list)
    complex_residual: list = field(default_factory=list)
    step_size: list = field(default_factory=list)

    def as_rows(self):
        return list(zip(range(len(self.energy)), self.energy))


def flow_to_solution(d: DiscretizedNahm, max_steps: int = 100, tol: float = 1e-6,
                     return_trace: bool = False):
    """Move (α, β) by hermitian gauges exp(ξ) until the real equation holds to ``tol``.

    ξ is the Gauss-Newton step for ‖μ‖², scaled by a step size that is halved
    whenever the energy would increase and grown by 1.2× after success.
    """
    trace = FlowTrace()

    def record(state):
        trace.energy.append(energy(state))
        trace.real_residual.append(real_residual(state))
        trace.complex_residual.append(complex_residual(state))

    record(d)
    step = 1.0
    for _ in range(max_steps):
        if trace.real_residual[-1] <= tol:
            break
        x = _newton_direction(d)
        while True:
            trial = apply_hermitian_gauge(d, step * x)
            e = energy(trial)
            if e <= trace.energy[-1]:
                break
            step /= 2
            if step < 1e-12:
                raise NonConvergenceError("line search stalled: no step decreases the energy",
                                          trace=trace.as_rows())
        d = trial
        trace.step_size.append(step)
        record(d)
        step = min(1.0, 1.2 * step)
    else:
        if trace.real_residual[-1] > tol:
            raise NonConvergenceError(
                f"real residual {trace.real_residual[-1]:.3e} > {tol:.1e} after {max_steps} steps",
                trace=trace.as_rows())
    return (d, trace) if return_trace else d
