"""Nahm complexes on the circle built from monad data, and back.

The circle is cut at θ₀ < θ∞ < θ₀ + 2π.  The short interval [θ₀, θ∞] carries a
rank-k pair (α, β); the long interval [θ∞, θ₀ + 2π] a rank-(k+j) pair.  For
j ≥ 2 the long side has poles at both ends: in the stored ("pole") frame the
gauge ``G(t) = diag(1_k, t^{e_1}, …, t^{e_j})`` with ``e_i = -(j-1)/2 + i - 1``
and ``t`` the distance to the end regularizes it.

Gauge action with factor ``c`` (default ½): g·(α, β) = (gαg⁻¹ − c ġg⁻¹, gβg⁻¹),
matched by the constancy equation c dβ/dθ + [α, β] = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from ._grid import derivative, polynomial_step, transport
from ._linalg import maxabs
from .errors import StructuralError, VerificationError
from .monad_core import MonadData, build_MN, shift_pair

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PathSpec:
    """Endpoints, grids and interpolation choices for the construction."""

    theta0: float = 0.0
    thetaInf: float = np.pi
    n_small: int = 512
    n_big: int = 512
    pole_points: int = 64
    t_min_ratio: float = 1e-4  # pole segments sample t in [t_min_ratio, pole_span_ratio]·eps
    pole_span_ratio: float = 0.1
    gauge_factor: float = 0.5
    log_branch: str = "auto"  # "auto" rotates off the branch cut, "principal" refuses

    def __post_init__(self):
        if not self.theta0 < self.thetaInf < self.theta0 + TWO_PI:
            raise StructuralError("need theta0 < thetaInf < theta0 + 2π", "thetaInf")
        if self.n_small < 8 or self.n_big < 16:
            raise StructuralError("grids need at least 8 (short) and 16 (long) points", "n_big")
        if not 8 <= self.pole_points < self.n_big // 2:
            raise StructuralError("pole_points must be in [8, n_big/2)", "pole_points")
        if not 0 < self.t_min_ratio < self.pole_span_ratio <= 1:
            raise StructuralError("need 0 < t_min_ratio < pole_span_ratio <= 1", "t_min_ratio")
        if self.gauge_factor <= 0:
            raise StructuralError("gauge_factor must be positive", "gauge_factor")
        if self.log_branch not in ("auto", "principal"):
            raise StructuralError("log_branch must be 'auto' or 'principal'", "log_branch")

    @property
    def eps(self) -> float:
        return (self.thetaInf - self.theta0) / 10.0

    @property
    def big_length(self) -> float:
        return self.theta0 + TWO_PI - self.thetaInf


@dataclass(frozen=True, eq=False)
class NahmComplexData:
    theta0: float
    thetaInf: float
    k: int
    j: int
    gauge_factor: float
    theta_small: np.ndarray
    alpha_small: np.ndarray
    beta_small: np.ndarray
    theta_big: np.ndarray
    alpha_big: np.ndarray
    beta_big: np.ndarray
    segments: tuple  # ((start, stop, kind), ...) over theta_big; kind in uniform/pole_left/pole_right
    i0: np.ndarray
    pi0: np.ndarray
    iInf: np.ndarray
    piInf: np.ndarray
    X_res: np.ndarray
    S_res: np.ndarray
    extra: dict = field(default_factory=dict)
    pathspec: PathSpec = field(default_factory=PathSpec)
    interpolation: str = "quintic-spline"

    @property
    def rank_small(self) -> int:
        return self.k

    @property
    def rank_big(self) -> int:
        return self.k + self.j

    @property
    def theta_end(self) -> float:
        return self.theta0 + TWO_PI


@dataclass(frozen=True)
class BoundaryNormalForm:
    P0_blk: np.ndarray
    q0: np.ndarray
    r0: np.ndarray
    s0: np.ndarray
    structure_residual: float = 0.0

    def beta(self) -> np.ndarray:
        k, j = self.P0_blk.shape[0], self.s0.shape[0]
        sp_ = shift_pair(j)
        r = np.vstack([self.r0, np.zeros((j - 1, k))]) if j else np.zeros((0, k))
        return np.block([[self.P0_blk, self.q0 @ sp_.eplus], [r, -sp_.s + self.s0 @ sp_.eplus]])


# ---------------------------------------------------------------- helpers

def pole_exponents(k: int, j: int) -> np.ndarray:
    e = np.zeros(k + j)
    e[k:] = -(j - 1) / 2 + np.arange(j)
    return e


def expected_residues(j: int, gauge_factor: float = 0.5) -> np.ndarray:
    """Residue eigenvalues of α at a pole: c·e_i, i.e. −(j−1)/4 … (j−1)/4 for c = ½."""
    return gauge_factor * (-(j - 1) / 2 + np.arange(j))


def _matrix_log(X: np.ndarray, branch: str) -> np.ndarray:
    lam = np.linalg.eigvals(X)
    scale = max(1.0, np.abs(lam).max())
    if np.min(np.abs(lam)) <= 1e-12 * scale:
        raise VerificationError("matrix to interpolate is singular", "log_branch", {"eigenvalues": lam})
    on_cut = np.abs(np.angle(lam)) > np.pi - 1e-6
    rot = 0.0
    if on_cut.any():
        if branch == "principal":
            raise VerificationError(
                "an eigenvalue lies on the principal branch cut; re-gauge the monodromy "
                "or use log_branch='auto'", "log_branch", {"eigenvalues": lam})
        angles = np.linspace(-np.pi, np.pi, 721)
        dist = [np.min(np.pi - np.abs(np.angle(lam * np.exp(-1j * a)))) for a in angles]
        rot = angles[int(np.argmax(dist))]
    L = sla.logm(np.exp(-1j * rot) * X) + 1j * rot * np.eye(X.shape[0])
    if maxabs(sla.expm(L) - X) > 1e-9 * max(1.0, maxabs(X)):
        raise VerificationError("matrix logarithm is inaccurate; re-gauge the monodromy",
                                "log_branch", {"eigenvalues": lam})
    return L


def _conj(g, X, ginv=None):
    ginv = np.linalg.inv(g) if ginv is None else ginv
    return g @ X @ ginv


def _big_grid(spec: PathSpec, poles: bool):
    lo, hi = spec.thetaInf, spec.theta0 + TWO_PI
    if not poles:
        return np.linspace(lo, hi, spec.n_big), ((0, spec.n_big, "uniform"),)
    p, eps = spec.pole_points, spec.eps
    span = eps * spec.pole_span_ratio
    t = np.geomspace(eps * spec.t_min_ratio, span, p)
    n_mid = spec.n_big - 2 * p
    mid = np.linspace(lo + span, hi - span, n_mid + 2)[1:-1]
    theta = np.concatenate([lo + t, mid, hi - t[::-1]])
    segs = ((0, p, "pole_left"), (p, p + n_mid, "uniform"), (p + n_mid, spec.n_big, "pole_right"))
    return theta, segs


def pole_profile(theta, theta_inf: float, big_length: float):
    """ρ = t_l·t_r/L and dρ/dθ: a smooth distance to the nearest pole of the long side."""
    tl, tr = theta - theta_inf, theta_inf + big_length - theta
    return tl * tr / big_length, (tr - tl) / big_length


def _blend_profile(theta, spec: PathSpec):
    """φ (0 within eps of θ∞, 1 within eps of θ₀+2π) and ρ, with derivatives."""
    lo, Lb, eps = spec.thetaInf, spec.big_length, spec.eps
    width = Lb - 2 * eps
    phi, dphi = polynomial_step((theta - lo - eps) / width)
    rho, drho = pole_profile(theta, lo, Lb)
    return phi, dphi / width, rho, drho


# ---------------------------------------------------------------- construction

def to_nahm_complex(data: MonadData, pathspec: PathSpec | None = None) -> NahmComplexData:
    spec = pathspec or PathSpec()
    return _build_j0(data, spec) if data.j == 0 else _build_positive(data, spec)


def _small_side(spec: PathSpec, beta: np.ndarray):
    th = np.linspace(spec.theta0, spec.thetaInf, spec.n_small)
    k = beta.shape[0]
    return th, np.zeros((len(th), k, k), dtype=complex), np.broadcast_to(beta, (len(th), k, k)).copy()


def _build_positive(data: MonadData, spec: PathSpec) -> NahmComplexData:
    k, j, c = data.k, data.j, spec.gauge_factor
    n = k + j
    M, N = build_MN(data)
    if np.linalg.matrix_rank(N) < n:
        raise VerificationError("N is singular (gencon4 fails)", "gencon4")
    Ninv = np.linalg.inv(N)
    L = _matrix_log(Ninv, spec.log_branch)

    theta, segs = _big_grid(spec, j >= 2)
    phi, dphi, rho, drho = _blend_profile(theta, spec)
    e = pole_exponents(k, j)
    alpha = np.empty((len(theta), n, n), dtype=complex)
    beta = np.empty_like(alpha)
    for idx, th in enumerate(theta):
        if phi[idx] == 0.0:
            H = Ninv
        elif phi[idx] == 1.0:
            H = np.eye(n)
        else:
            H = sla.expm((1 - phi[idx]) * L)
        Gd = rho[idx] ** e
        core = _conj(H, -M)
        beta[idx] = core * (Gd[None, :] / Gd[:, None])
        alpha[idx] = c * dphi[idx] * (L * (Gd[None, :] / Gd[:, None]))
        if j >= 2:
            alpha[idx] += np.diag(c * drho[idx] * e / rho[idx])

    ts, a_s, b_s = _small_side(spec, -data.B)
    i = np.vstack([np.eye(k), np.zeros((j, k))])
    pi = i.T.copy()
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return NahmComplexData(
        spec.theta0, spec.thetaInf, k, j, c, ts, a_s, b_s, theta, alpha, beta, segs,
        i, pi, i.copy(), pi.copy(),
        np.diag(expected_residues(j, c)).astype(complex), -shift_pair(j).s.astype(complex),
        {"v0": v, "vinf": v.copy()}, spec,
    )


def _build_j0(data: MonadData, spec: PathSpec) -> NahmComplexData:
    k, c = data.k, spec.gauge_factor
    if k and np.linalg.matrix_rank(data.A) < k:
        raise VerificationError("A is singular (gencon4 fails)", "gencon4")
    Ainv = np.linalg.inv(data.A)
    Bt = data.B - data.C1 @ data.D1 @ Ainv
    L = _matrix_log(Ainv, spec.log_branch) if k else np.zeros((0, 0))
    theta, segs = _big_grid(spec, False)
    phi, dphi, _, _ = _blend_profile(theta, spec)
    alpha = np.empty((len(theta), k, k), dtype=complex)
    beta = np.empty_like(alpha)
    for idx in range(len(theta)):
        g = sla.expm((1 - phi[idx]) * L) if k else L
        beta[idx] = _conj(g, Bt)
        alpha[idx] = c * dphi[idx] * L
    ts, a_s, b_s = _small_side(spec, np.asarray(data.B))
    I = np.eye(k, dtype=complex)
    extra = {"u0": data.C1.copy(), "w0": data.D1 @ Ainv,
             "uinf": -Ainv @ data.C2, "winf": data.D2.copy()}
    empty = np.zeros((0, 0), dtype=complex)
    return NahmComplexData(
        spec.theta0, spec.thetaInf, k, 0, c, ts, a_s, b_s, theta, alpha, beta, segs,
        I, I.copy(), I.copy(), I.copy(), empty, empty.copy(), extra, spec,
    )


# ---------------------------------------------------------------- frames

@dataclass
class _Segment:
    side: str
    kind: str
    theta: np.ndarray
    x: np.ndarray         # differentiation coordinate (θ, or log t at a pole)
    dtheta_dx: np.ndarray
    t: np.ndarray | None
    alpha: np.ndarray     # regular frame
    beta: np.ndarray


def _segments(ncd: NahmComplexData):
    """Grid segments with (α, β) in the regular frame G(ρ)·(pole frame)."""
    c = ncd.gauge_factor
    n = len(ncd.theta_small)
    yield _Segment("small", "uniform", ncd.theta_small, ncd.theta_small, np.ones(n), None,
                   ncd.alpha_small, ncd.beta_small)
    e = pole_exponents(ncd.k, ncd.j)
    for start, stop, kind in ncd.segments:
        th = ncd.theta_big[start:stop]
        a, b = ncd.alpha_big[start:stop], ncd.beta_big[start:stop]
        if ncd.j >= 2:
            rho, drho = pole_profile(th, ncd.thetaInf, ncd.theta_end - ncd.thetaInf)
            Gd = rho[:, None] ** e[None, :]
            ratio = Gd[:, :, None] / Gd[:, None, :]
            a = a * ratio - c * (e[None, :] * (drho / rho)[:, None])[:, :, None] * np.eye(len(e))
            b = b * ratio
        if kind == "uniform":
            yield _Segment("big", kind, th, th, np.ones(len(th)), None, a, b)
            continue
        sign = 1.0 if kind == "pole_left" else -1.0
        t = th - ncd.thetaInf if sign > 0 else ncd.theta_end - th
        yield _Segment("big", kind, th, np.log(t), sign * t, t, a, b)


def _constancy(seg: _Segment, c: float) -> np.ndarray:
    db = derivative(seg.x, seg.beta) / seg.dtheta_dx[:, None, None]
    return c * db + seg.alpha @ seg.beta - seg.beta @ seg.alpha


def _at_pole(seg: _Segment, arr: np.ndarray) -> np.ndarray:
    """Quadratic extrapolation of a regular-frame quantity to t = 0."""
    order = np.argsort(seg.t)[:3]
    t, f = seg.t[order], arr[order]
    w = np.array([t[1] * t[2] / ((t[0] - t[1]) * (t[0] - t[2])),
                  t[0] * t[2] / ((t[1] - t[0]) * (t[1] - t[2])),
                  t[0] * t[1] / ((t[2] - t[0]) * (t[2] - t[1]))])
    return np.tensordot(w, f, axes=(0, 0))


def _big_end_values(ncd: NahmComplexData):
    """Regular-frame β and α of the long side at θ∞ and at θ₀ + 2π."""
    segs = [s for s in _segments(ncd) if s.side == "big"]
    if ncd.j < 2:
        s = segs[0]
        return (s.beta[0], s.alpha[0]), (s.beta[-1], s.alpha[-1])
    left, right = segs[0], segs[-1]
    return ((_at_pole(left, left.beta), _at_pole(left, left.alpha)),
            (_at_pole(right, right.beta), _at_pole(right, right.alpha)))


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class CheckResult:
    value: float
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NahmReport:
    checks: dict
    tolerance: float

    @property
    def ok(self) -> bool:
        return all(ch.passed for ch in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, ch in self.checks.items() if not ch.passed]


def _slope(t: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(np.log(t), np.log(values), 1)[0])


def verify_nahm_complex(ncd: NahmComplexData, tol: float = 1e-8) -> NahmReport:
    k, j, c = ncd.k, ncd.j, ncd.gauge_factor
    checks: dict[str, CheckResult] = {}
    segs = list(_segments(ncd))

    for side in ("small", "big"):
        worst, scale = 0.0, 1.0
        for s in (s for s in segs if s.side == side):
            if len(s.theta) >= 2:
                worst = max(worst, maxabs(_constancy(s, c)))
            scale = max(scale, maxabs(s.beta))
        checks[f"constancy_{side}"] = CheckResult(
            worst, worst <= tol * scale, {"scale": scale, "relative": worst / scale})

    Ik = np.eye(k)
    for end, (i, p) in {"0": (ncd.i0, ncd.pi0), "inf": (ncd.iInf, ncd.piInf)}.items():
        r = maxabs(p @ i - Ik)
        checks[f"gluing_{end}"] = CheckResult(r, r <= tol)

    (b_inf, _), (b_end, _) = _big_end_values(ncd)
    ends = {"0": (ncd.beta_small[0], b_end, ncd.i0, ncd.pi0),
            "inf": (ncd.beta_small[-1], b_inf, ncd.iInf, ncd.piInf)}
    scale = max(1.0, maxabs(ncd.beta_small))

    if j == 0:
        for end, (bs, bb, i, p) in ends.items():
            J = bs - p @ bb @ i
            sv = np.linalg.svd(J, compute_uv=False) if k else np.zeros(0)
            ratio = float(sv[1] / sv[0]) if len(sv) > 1 and sv[0] > 0 else 0.0
            nonzero = bool(len(sv) and sv[0] > 1e-12 * scale)
            checks[f"jump_rank_{end}"] = CheckResult(
                ratio, nonzero and ratio <= 1e-9, {"singular_values": sv})
            u, w = ncd.extra[f"u{end}"], ncd.extra[f"w{end}"]
            r = maxabs(J - u @ w)
            checks[f"jump_factor_{end}"] = CheckResult(r, r <= tol * scale)
        return NahmReport(checks, tol)

    for end, (bs, bb, i, p) in ends.items():
        r = maxabs(p @ bb @ i - bs)
        checks[f"boundary_{end}"] = CheckResult(r, r <= tol * scale)

    X = ncd.X_res
    target = np.sort_complex(expected_residues(j, c).astype(complex))
    if maxabs(X - np.diag(np.diag(X))) == 0:
        got = np.sort_complex(np.diag(X))
        diff = float(np.max(np.abs(got - target)))
        checks["residue_class"] = CheckResult(diff, diff == 0.0)
    else:
        got = np.sort_complex(np.linalg.eigvals(X))
        diff = float(np.max(np.abs(got - target)))
        checks["residue_class"] = CheckResult(diff, diff <= 1e-9)
    S = ncd.S_res
    sv = np.linalg.svd(S, compute_uv=False)
    nil = maxabs(np.linalg.matrix_power(S, j))
    shift_like = nil <= 1e-9 and (j == 1 or sv[j - 2] > 1e-6) and sv[-1] <= 1e-9 * max(1.0, sv[0])
    checks["shift_residue"] = CheckResult(nil, bool(shift_like), {"singular_values": sv})

    if j >= 2:
        for s in (s for s in segs if s.kind != "uniform"):
            end = "inf" if s.kind == "pole_left" else "0"
            start, stop, _ = next(x for x in ncd.segments if x[2] == s.kind)
            t = s.t
            a_pole = ncd.alpha_big[start:stop]
            b_pole = ncd.beta_big[start:stop]
            i0 = int(np.argmin(t))
            sign = 1.0 if s.kind == "pole_left" else -1.0
            res_a = sign * t[i0] * a_pole[i0][k:, k:]
            diff = float(np.max(np.abs(np.sort_complex(np.linalg.eigvals(res_a)) - target)))
            res_b = t[i0] * b_pole[i0][k:, k:]
            diff_b = float(np.max(np.abs(np.linalg.eigvals(res_b))))
            checks[f"residue_numeric_{end}"] = CheckResult(
                max(diff, diff_b), max(diff, diff_b) <= 1e-4, {"alpha": diff, "beta": diff_b})
            near = t <= 10 * t.min() * (1 + 1e-9)
            slopes, ok = {}, True
            for name, arr in (("beta_upper", b_pole[:, :k, k:]), ("beta_lower", b_pole[:, k:, :k]),
                              ("alpha_upper", a_pole[:, :k, k:]), ("alpha_lower", a_pole[:, k:, :k])):
                sq = np.sum(np.abs(arr[near]) ** 2, axis=(1, 2))
                if sq.max() <= (1e-12 * max(1.0, maxabs(b_pole))) ** 2:
                    slopes[name] = None
                    continue
                sl = _slope(t[near], sq)
                slopes[name] = sl
                ok &= sl >= (j - 1) - 0.2
            checks[f"pole_orders_{end}"] = CheckResult(
                min([v for v in slopes.values() if v is not None], default=float(j - 1)), bool(ok), slopes)
    return NahmReport(checks, tol)


# ---------------------------------------------------------------- gauge action

@dataclass(frozen=True)
class GaugePath:
    """Gauge transformations on both intervals.

    ``small(theta)`` and ``big(theta)`` take an array of angles and return
    ``(g, gdot)`` with shapes (n, r, r).
    """

    small: Callable
    big: Callable

    @classmethod
    def constant(cls, g_small, g_big) -> "GaugePath":
        gs, gb = np.asarray(g_small, dtype=complex), np.asarray(g_big, dtype=complex)

        def const(g):
            def f(theta):
                n = len(np.atleast_1d(theta))
                return np.broadcast_to(g, (n,) + g.shape).copy(), np.zeros((n,) + g.shape, dtype=complex)
            return f
        return cls(const(gs), const(gb))


def _check_pole_gauge(gpath: GaugePath, ncd: NahmComplexData, end: str, g_small_end):
    k, j = ncd.k, ncd.j
    eps = ncd.pathspec.eps
    theta_pole = ncd.thetaInf if end == "inf" else ncd.theta_end
    sign = 1.0 if end == "inf" else -1.0
    g0 = gpath.big(np.array([theta_pole]))[0][0]
    if maxabs(g0[:k, :k] - g_small_end) > 1e-9 * max(1.0, maxabs(g_small_end)):
        raise StructuralError(f"gauge at the {end} pole does not match the short side on the k-block",
                              "gpath")
    t1, t2 = 1e-3 * eps, 1e-5 * eps
    g1 = gpath.big(np.array([theta_pole + sign * t1]))[0][0]
    g2 = gpath.big(np.array([theta_pole + sign * t2]))[0][0]
    floor = 1e-10 * max(1.0, maxabs(g0))
    need = np.zeros((k + j, k + j))
    need[:k, k:] = need[k:, :k] = (j + 1) / 2
    for a in range(j):
        for b in range(a + 1, j):
            need[k + a, k + b] = b - a
    bad = []
    for a, b in zip(*np.nonzero(need)):
        m = need[a, b]
        r1 = abs(g1[a, b]) / t1 ** m
        r2 = abs(g2[a, b]) / t2 ** m
        if abs(g2[a, b]) > floor and r2 > 5 * r1:
            bad.append((int(a), int(b), float(m)))
    if bad:
        raise StructuralError(f"gauge violates the block vanishing orders at the {end} pole: {bad}",
                              "gpath")
    return g0


def gauge_act(gpath: GaugePath, ncd: NahmComplexData) -> NahmComplexData:
    c = ncd.gauge_factor
    k, j = ncd.k, ncd.j

    def act(theta, alpha, beta, fn):
        g, gd = fn(theta)
        g, gd = np.asarray(g, dtype=complex), np.asarray(gd, dtype=complex)
        ginv = np.linalg.inv(g)
        return g @ alpha @ ginv - c * gd @ ginv, g @ beta @ ginv

    a_s, b_s = act(ncd.theta_small, ncd.alpha_small, ncd.beta_small, gpath.small)
    a_b, b_b = act(ncd.theta_big, ncd.alpha_big, ncd.beta_big, gpath.big)

    gs = gpath.small(np.array([ncd.theta0, ncd.thetaInf]))[0]
    gs0, gsinf = np.asarray(gs[0], dtype=complex), np.asarray(gs[1], dtype=complex)
    if j >= 1:
        gbinf = _check_pole_gauge(gpath, ncd, "inf", gsinf)
        gb0 = _check_pole_gauge(gpath, ncd, "0", gs0)
    else:
        gb = gpath.big(np.array([ncd.thetaInf, ncd.theta_end]))[0]
        gbinf, gb0 = np.asarray(gb[0], dtype=complex), np.asarray(gb[1], dtype=complex)

    extra = dict(ncd.extra)
    if j == 0:
        extra["u0"], extra["w0"] = gs0 @ extra["u0"], extra["w0"] @ np.linalg.inv(gs0)
        extra["uinf"], extra["winf"] = gsinf @ extra["uinf"], extra["winf"] @ np.linalg.inv(gsinf)
    else:
        extra["v0"], extra["vinf"] = gb0 @ extra["v0"], gbinf @ extra["vinf"]
    return replace(
        ncd, alpha_small=a_s, beta_small=b_s, alpha_big=a_b, beta_big=b_b,
        i0=gb0 @ ncd.i0 @ np.linalg.inv(gs0), pi0=gs0 @ ncd.pi0 @ np.linalg.inv(gb0),
        iInf=gbinf @ ncd.iInf @ np.linalg.inv(gsinf), piInf=gsinf @ ncd.piInf @ np.linalg.inv(gbinf),
        extra=extra,
    )


# ---------------------------------------------------------------- inversion

def _transports(ncd: NahmComplexData):
    """Short-side transport θ₀ → θ∞ and long-side regular-frame transport θ∞ → θ₀+2π."""
    c = ncd.gauge_factor
    segs = list(_segments(ncd))
    small = segs[0]
    S = transport(small.theta, -small.alpha / c)
    big = segs[1:]
    if len(big) == 1:
        return S, transport(big[0].theta, -big[0].alpha / c)
    left, mid, right = big
    # from t = 0 to t_min the regular frame is frozen at its first sample
    Psi_a = transport(left.x, -(left.dtheta_dx[:, None, None] * left.alpha) / c) \
        @ sla.expm(-left.alpha[0] * left.t[0] / c)
    th_mid = np.concatenate([[left.theta[-1]], mid.theta, [right.theta[0]]])
    a_mid = np.concatenate([left.alpha[-1:], mid.alpha, right.alpha[:1]])
    P_mid = transport(th_mid, -a_mid / c)
    rx = right.x[::-1]
    ra = (right.dtheta_dx[:, None, None] * right.alpha)[::-1]
    Psi_b = transport(rx, -ra / c) @ sla.expm(right.alpha[-1] * right.t[-1] / c)
    return S, np.linalg.solve(Psi_b, P_mid @ Psi_a)


def _normal_frame(beta, i, pi, v_reg, j):
    n = beta.shape[0]
    proj = np.eye(n) - i @ pi
    cols = [v_reg.reshape(-1, 1)]
    for _ in range(j - 1):
        cols.append(-proj @ beta @ cols[-1])
    T = np.hstack([i] + cols)
    if np.linalg.cond(T) > 1e12:
        raise VerificationError("boundary frame is degenerate; normal form does not exist",
                                "normal_form", {"cond": float(np.linalg.cond(T))})
    return T


def _split_normal(beta_nf, k, j) -> BoundaryNormalForm:
    nf = BoundaryNormalForm(beta_nf[:k, :k], beta_nf[:k, -1:], beta_nf[k:k + 1, :k], beta_nf[k:, -1:])
    return replace(nf, structure_residual=maxabs(nf.beta() - beta_nf))


def _recover(ncd: NahmComplexData, tol: float = 1e-8):
    report = verify_nahm_complex(ncd, tol=tol)
    if not report.ok:
        raise VerificationError(f"input does not verify: {report.failures()}", report.failures()[0],
                                {name: report.checks[name].value for name in report.failures()})
    k, j = ncd.k, ncd.j
    S, P = _transports(ncd)
    (b_inf, _), (b_end, _) = _big_end_values(ncd)
    if j == 0:
        B = ncd.beta_small[0]
        iinf = ncd.iInf @ S
        A = ncd.pi0 @ P @ iinf
        Sinv = np.linalg.inv(S)
        u_inf, w_inf = Sinv @ ncd.extra["uinf"], ncd.extra["winf"] @ S
        data = MonadData(k, 0, A, B, np.hstack([ncd.extra["u0"], -A @ u_inf]),
                         np.vstack([ncd.extra["w0"] @ A, w_inf]))
        nf0 = BoundaryNormalForm(ncd.pi0 @ b_end @ ncd.i0, ncd.extra["u0"], ncd.extra["w0"],
                                 np.zeros((0, 1), dtype=complex))
        nfinf = BoundaryNormalForm(np.linalg.inv(iinf) @ b_inf @ iinf, u_inf, w_inf,
                                   np.zeros((0, 1), dtype=complex))
        return data, nf0, nfinf

    def v_reg(v):
        out = np.zeros(k + j, dtype=complex)
        out[k] = v[k]
        return out

    T0 = _normal_frame(b_end, ncd.i0, ncd.pi0, v_reg(ncd.extra["v0"]), j)
    Tinf = _normal_frame(b_inf, ncd.iInf @ S, np.linalg.solve(S, ncd.piInf), v_reg(ncd.extra["vinf"]), j)
    nf0 = _split_normal(np.linalg.solve(T0, b_end @ T0), k, j)
    nfinf = _split_normal(np.linalg.solve(Tinf, b_inf @ Tinf), k, j)
    N = np.linalg.solve(T0, P @ Tinf)
    Ap = N[k:, :k]
    data = MonadData(
        k, j, N[:k, :k], -nf0.P0_blk,
        np.hstack([nf0.q0, N[:k, k:k + 1]]),
        np.vstack([Ap[-1:], -nfinf.r0]),
        Ap, -nf0.r0, np.hstack([nf0.s0, N[k:, k:k + 1]]),
    )
    return data, nf0, nfinf


def from_nahm_complex(ncd: NahmComplexData, tol: float = 1e-8) -> MonadData:
    """Recover monad data; the input must first pass verify_nahm_complex at ``tol``."""
    return _recover(ncd, tol)[0]


def normal_form(ncd: NahmComplexData):
    """(normal-form complex, boundary form at θ₀, boundary form at θ∞)."""
    data, nf0, nfinf = _recover(ncd)
    return to_nahm_complex(data, ncd.pathspec), nf0, nfinf


def boundary_invariants(nf: BoundaryNormalForm) -> dict[str, np.ndarray]:
    """Gl(k)-invariants of a boundary form: spectra of P₀ and of the assembled β."""
    return {"P0": np.sort_complex(np.linalg.eigvals(nf.P0_blk)),
            "beta": np.sort_complex(np.linalg.eigvals(nf.beta())) if nf.s0.shape[0] else
            np.sort_complex(np.linalg.eigvals(nf.P0_blk))}


__all__ = [
    "PathSpec", "NahmComplexData", "BoundaryNormalForm", "CheckResult", "NahmReport", "GaugePath",
    "to_nahm_complex", "verify_nahm_complex", "gauge_act", "normal_form", "from_nahm_complex",
    "pole_exponents", "expected_residues", "boundary_invariants",
]
