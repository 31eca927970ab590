"""Matrix data of the monads, their equations, genericity and the Gl(k) action.

A monad datum is the tuple ``(A, B, C, D, Aprime, Bprime, Cprime)`` with
shapes k×k, k×k, k×2, 2×k, j×k, 1×k, j×2.  For ``j = 0`` the primed
matrices are genuinely empty arrays, never ``None``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._config import WITNESS_TOL, default_tolerance
from ._linalg import (
    cluster_values,
    maxabs,
    null_space,
    orth,
    random_complex,
    random_well_conditioned,
    rank_decision,
)
from .errors import GenerationError, StructuralError

_FIELDS = ("A", "B", "C", "D", "Aprime", "Bprime", "Cprime")


def _shapes(k: int, j: int) -> dict[str, tuple[int, int]]:
    return {
        "A": (k, k),
        "B": (k, k),
        "C": (k, 2),
        "D": (2, k),
        "Aprime": (j, k),
        "Bprime": (1, k),
        "Cprime": (j, 2),
    }


@dataclass(frozen=True, eq=False)
class MonadData:
    k: int
    j: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Aprime: np.ndarray = None
    Bprime: np.ndarray = None
    Cprime: np.ndarray = None

    def __post_init__(self):
        k, j = self.k, self.j
        if not (isinstance(k, (int, np.integer)) and k >= 0):
            raise StructuralError(f"k must be a nonnegative integer, got {k!r}", "k")
        if not (isinstance(j, (int, np.integer)) and j >= 0):
            raise StructuralError(f"j must be a nonnegative integer, got {j!r}", "j")
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "j", int(j))
        for name, shape in _shapes(int(k), int(j)).items():
            value = getattr(self, name)
            if value is None:
                if shape[0] * shape[1] != 0 and not (name == "Bprime" and j == 0):
                    raise StructuralError(f"field {name} is missing", name)
                value = np.zeros(shape, dtype=complex)
            try:
                arr = np.array(value, dtype=complex)
            except (TypeError, ValueError) as exc:
                raise StructuralError(f"field {name} is not numeric: {exc}", name) from exc
            if arr.size == 0:
                arr = arr.reshape(shape) if arr.size == shape[0] * shape[1] else arr
            elif arr.ndim == 1 and shape[0] == 1:
                arr = arr.reshape(1, -1)
            elif arr.ndim == 1 and shape[1] == 1:
                arr = arr.reshape(-1, 1)
            if arr.shape != shape:
                raise StructuralError(
                    f"field {name} has shape {arr.shape}, expected {shape}", name
                )
            if not np.all(np.isfinite(arr)):
                raise StructuralError(f"field {name} has non-finite entries", name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def C1(self):
        return self.C[:, :1]

    @property
    def C2(self):
        return self.C[:, 1:]

    @property
    def D1(self):
        return self.D[:1, :]

    @property
    def D2(self):
        return self.D[1:, :]

    @property
    def C1p(self):
        return self.Cprime[:, :1]

    @property
    def C2p(self):
        return self.Cprime[:, 1:]

    def replace(self, **changes) -> "MonadData":
        values = {name: getattr(self, name) for name in ("k", "j") + _FIELDS}
        values.update(changes)
        return MonadData(**values)

    def __eq__(self, other):
        if not isinstance(other, MonadData):
            return NotImplemented
        return (self.k, self.j) == (other.k, other.j) and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in _FIELDS
        )

    __hash__ = None

    def scale(self) -> float:
        return max(1.0, *(maxabs(getattr(self, f)) for f in _FIELDS))


@dataclass(frozen=True)
class ShiftPair:
    s: np.ndarray
    eplus: np.ndarray


def shift_pair(j: int) -> ShiftPair:
    """Lower shift ``s`` (ones on the subdiagonal) and the last unit row."""
    s = np.eye(j, k=-1, dtype=complex)
    eplus = np.zeros((1, j), dtype=complex)
    if j:
        eplus[0, -1] = 1.0
    return ShiftPair(s, eplus)


# ---------------------------------------------------------------- equations

@dataclass(frozen=True)
class ResidualReport:
    eq1: float
    eq2: float
    eq3: float
    scale1: float
    scale2: float
    scale3: float
    A_invertible: bool | None
    tolerance: float

    @property
    def residuals(self) -> tuple[float, float, float]:
        return (self.eq1, self.eq2, self.eq3)

    @property
    def relative(self) -> tuple[float, float, float]:
        return (self.eq1 / self.scale1, self.eq2 / self.scale2, self.eq3 / self.scale3)

    @property
    def ok(self) -> bool:
        if any(r > self.tolerance for r in self.relative):
            return False
        return self.A_invertible is not False


def monad_residual_matrices(data: MonadData):
    sp = shift_pair(data.j)
    A, B, C, D = data.A, data.B, data.C, data.D
    r1 = A @ B - B @ A + C @ D
    Bp0 = np.vstack([data.Bprime, np.zeros((max(data.j - 1, 0), data.k))])[: data.j]
    r2 = Bp0 @ A + sp.s @ data.Aprime - data.Aprime @ B - data.Cprime @ D
    r3 = data.D1 - sp.eplus @ data.Aprime if data.j else np.zeros((1, 0))
    return r1, r2, r3


def verify_monad_equations(data: MonadData, tol: float | None = None) -> ResidualReport:
    """Max-norm residuals of the three monad equations.

    Relative residuals divide by the size of the largest product entering
    each equation (at least 1).
    """
    tol = default_tolerance() if tol is None else tol
    r1, r2, r3 = monad_residual_matrices(data)
    nA, nB, nC, nD = (np.linalg.norm(getattr(data, f), 2) if getattr(data, f).size else 0.0
                      for f in "ABCD")
    nAp = np.linalg.norm(data.Aprime, 2) if data.Aprime.size else 0.0
    nBp = np.linalg.norm(data.Bprime, 2) if data.Bprime.size else 0.0
    nCp = np.linalg.norm(data.Cprime, 2) if data.Cprime.size else 0.0
    s1 = max(1.0, nA * nB, nC * nD)
    s2 = max(1.0, nBp * nA, nAp, nAp * nB, nCp * nD)
    s3 = max(1.0, nAp, nD)
    if data.j == 0:
        inv = bool(data.k == 0 or rank_decision(data.A).rank == data.k)
    else:
        inv = None
    return ResidualReport(maxabs(r1), maxabs(r2), maxabs(r3), s1, s2, s3, inv, tol)


# ---------------------------------------------------------------- genericity

@dataclass(frozen=True)
class ConditionResult:
    name: str
    holds: bool | None  # None: the rank verdict was indeterminate
    witness: dict | None = None
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GenericityReport:
    gencon1: ConditionResult
    gencon2: ConditionResult
    gencon3: ConditionResult
    gencon4: ConditionResult
    tolerance: float

    @property
    def conditions(self) -> tuple[ConditionResult, ...]:
        return (self.gencon1, self.gencon2, self.gencon3, self.gencon4)

    @property
    def flags(self) -> tuple[bool | None, ...]:
        return tuple(c.holds for c in self.conditions)

    @property
    def ok(self) -> bool:
        return all(c.holds is True for c in self.conditions)


def _common_eigvec_in_kernel(A, B, D):
    """Find v != 0 with Av = yv, Bv = xv, Dv = 0, or return None.

    For each eigenvalue y of A, restrict to ker(A - y) ∩ ker D and shrink
    to the largest B-invariant subspace; any eigenvector of B there works.
    """
    k = A.shape[0]
    if k == 0:
        return None
    scale = max(1.0, maxabs(A), maxabs(B), maxabs(D))
    eigs = np.linalg.eigvals(A)
    best = None
    for y in cluster_values(eigs, 1e-6 * scale):
        V = null_space(np.vstack([A - y * np.eye(k), D]), rtol=1e-7)
        while V.shape[1]:
            W = (np.eye(k) - V @ V.conj().T) @ B @ V
            Z = null_space(W, rtol=1e-7) if maxabs(W) > 1e-9 * scale else np.eye(V.shape[1])
            if Z.shape[1] == V.shape[1]:
                break
            V = orth(V @ Z)
        if not V.shape[1]:
            continue
        small = V.conj().T @ B @ V
        xs, vecs = np.linalg.eig(small)
        v = V @ vecs[:, 0]
        v = v / np.linalg.norm(v)
        y_ref = complex(v.conj() @ A @ v)
        x = complex(xs[0])
        res = maxabs(np.concatenate([(A - y_ref * np.eye(k)) @ v, (B - x * np.eye(k)) @ v, D @ v]))
        cand = (res / scale, x, y_ref, v)
        if best is None or cand[0] < best[0]:
            best = cand
    return best


def _gencon3_matrices(data: MonadData):
    k, j = data.k, data.j
    sp = shift_pair(j)
    Bp0 = np.vstack([data.Bprime, np.zeros((j - 1, k))])
    R0 = np.block([
        [-data.B, data.A, data.C, np.zeros((k, j))],
        [-Bp0, data.Aprime, data.Cprime, -sp.s],
        [np.zeros((1, 2 * k)), np.array([[1.0, 0.0]]), -sp.eplus],
    ]).astype(complex)
    R1 = np.block([
        [np.eye(k), np.zeros((k, k + 2 + j))],
        [np.zeros((j, 2 * k + 2)), np.eye(j)],
        [np.zeros((1, 2 * k + 2 + j))],
    ]).astype(complex)
    return R0, R1


def _surjectivity_failures(R0, R1, seed: int = 12345):
    """Points x where R0 + x R1 (n×m, n ≤ m) loses row rank.

    Returns (generic_holds, candidates) where candidates are verified
    failure points with their left-kernel rows and rank decisions.
    """
    n, m = R0.shape
    rng = np.random.default_rng(seed)
    x_rand = complex(random_complex(rng, 1)[0])
    dec = rank_decision(R0 + x_rand * R1)
    if dec.rank < n:
        return False, [(x_rand, dec)]
    cands = []
    for _ in range(2):
        Pi = random_complex(rng, m, n)
        vals = sla.eigvals(R0 @ Pi, -(R1 @ Pi))
        cands.extend(v for v in vals if np.isfinite(v))
    scale = max(1.0, maxabs(R0), maxabs(R1))
    failures = []
    for x in cluster_values(cands, 1e-8 * scale):
        dec = rank_decision(R0 + x * R1)
        if dec.rank < n or not dec.determinate:
            failures.append((x, dec))
    return True, failures


def check_genericity(data: MonadData, tol: float | None = None) -> GenericityReport:
    tol = default_tolerance() if tol is None else tol
    k, j = data.k, data.j

    hit = _common_eigvec_in_kernel(data.A, data.B, data.D)
    if hit is not None and hit[0] <= WITNESS_TOL:
        res, x, y, v = hit
        g1 = ConditionResult("gencon1", False, {"x": x, "y": y, "vector": v, "residual": res})
    else:
        g1 = ConditionResult("gencon1", True)

    hit = _common_eigvec_in_kernel(data.A.T, data.B.T, data.C.T)
    if hit is not None and hit[0] <= WITNESS_TOL:
        res, x, y, w = hit
        g2 = ConditionResult("gencon2", False, {"x": x, "y": y, "vector": w, "residual": res})
    else:
        g2 = ConditionResult("gencon2", True)

    if j == 0:
        g3 = ConditionResult("gencon3", True, detail={"vacuous": True})
    else:
        R0, R1 = _gencon3_matrices(data)
        generic, failures = _surjectivity_failures(R0, R1)
        definite = [(x, d) for x, d in failures if d.determinate]
        if definite:
            x, dec = definite[0]
            w = null_space((R0 + x * R1).T).T[0]
            res = maxabs(w @ (R0 + x * R1)) / max(1.0, maxabs(R0) + abs(x) * maxabs(R1))
            g3 = ConditionResult(
                "gencon3", False, {"x": x, "vector": w, "residual": res},
                {"everywhere": not generic},
            )
        elif failures:
            g3 = ConditionResult("gencon3", None, {"x": failures[0][0]})
        else:
            g3 = ConditionResult("gencon3", True)

    _, N = build_MN(data)
    if N.size == 0:
        g4 = ConditionResult("gencon4", True, detail={"cond": 1.0})
    else:
        dec = rank_decision(N)
        cond = float(dec.singular_values[0] / dec.singular_values[-1]) if dec.singular_values[-1] > 0 else np.inf
        holds = (dec.rank == N.shape[0]) if dec.determinate else None
        witness = None
        if holds is False:
            witness = {"vector": null_space(N)[:, 0]}
        g4 = ConditionResult("gencon4", holds, witness, {"cond": cond})
    return GenericityReport(g1, g2, g3, g4, tol)


# ---------------------------------------------------------------- group action

def gl_k_act(g, data: MonadData) -> MonadData:
    """(A,B,C,D,A',B',C') -> (gAg⁻¹, gBg⁻¹, gC, Dg⁻¹, A'g⁻¹, B'g⁻¹, C')."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (data.k, data.k):
        raise StructuralError(f"g has shape {g.shape}, expected {(data.k, data.k)}", "g")
    if data.k and rank_decision(g).rank < data.k:
        raise StructuralError("g is singular", "g")
    gi = np.linalg.inv(g) if data.k else g
    return MonadData(
        data.k, data.j,
        g @ data.A @ gi, g @ data.B @ gi, g @ data.C, data.D @ gi,
        data.Aprime @ gi, data.Bprime @ gi, data.Cprime,
    )


def build_M(data: MonadData) -> np.ndarray:
    k, j = data.k, data.j
    sp = shift_pair(j)
    Bp0 = np.vstack([data.Bprime, np.zeros((max(j - 1, 0), k))])[:j]
    return np.block([
        [data.B, -data.C1 @ sp.eplus],
        [Bp0, sp.s - data.C1p @ sp.eplus],
    ])


def _krylov_columns(data: MonadData, M: np.ndarray, count: int) -> list[np.ndarray]:
    col = np.vstack([data.C2, data.C2p])
    cols = []
    for _ in range(count):
        cols.append(col)
        col = M @ col
    return cols


def build_MN(data: MonadData) -> tuple[np.ndarray, np.ndarray]:
    """M and the Krylov matrix N = [[A;A'] | c | Mc | … | M^{j-1}c], c = [C₂;C′₂]."""
    M = build_M(data)
    first = np.vstack([data.A, data.Aprime])
    N = np.hstack([first] + _krylov_columns(data, M, data.j))
    return M, N


def build_N_prime(data: MonadData) -> np.ndarray:
    """N with its last Krylov column dropped (requires j ≥ 1)."""
    if data.j < 1:
        raise StructuralError("N' needs j >= 1", "j")
    M = build_M(data)
    first = np.vstack([data.A, data.Aprime])
    return np.hstack([first] + _krylov_columns(data, M, data.j - 1))


# ---------------------------------------------------------------- Krylov / flag

@dataclass(frozen=True)
class KrylovBasis:
    rows: np.ndarray  # (vT^{d-1}, …, vT, v) top to bottom
    rank: int
    full_rank: bool


def krylov_basis(T, v) -> KrylovBasis:
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    v = np.asarray(v, dtype=complex).reshape(1, -1)
    d = T.shape[0]
    if T.shape != (d, d) or v.shape[1] != d:
        raise StructuralError("krylov_basis needs square T and a matching row v", "T")
    rows = [v]
    for _ in range(d - 1):
        rows.append(rows[-1] @ T)
    K = np.vstack(rows[::-1]) if d else np.zeros((0, 0), dtype=complex)
    r = rank_decision(K).rank if d else 0
    return KrylovBasis(K, r, r == d)


def flag_splitting_degree(data: MonadData, y0: complex) -> int:
    """dim ker(A - y0)."""
    if data.k == 0:
        return 0
    return data.k - rank_decision(data.A - y0 * np.eye(data.k)).rank


# ---------------------------------------------------------------- generation

def _sample_eigenvalues(rng, k: int, zero_eigs: int, sep: float = 0.5) -> np.ndarray:
    for _ in range(1000):
        lam = 1.5 * random_complex(rng, k)
        lam[:zero_eigs] = 0.0
        diffs = np.abs(lam[:, None] - lam[None, :]) + np.eye(k) * 10
        if k < 2 or diffs.min() > sep:
            return lam
    raise GenerationError("could not sample separated eigenvalues")


def _solve_primed(rng, k, j, A, B, D):
    """Fill A', B', C' so the second and third monad equations hold."""
    Ap = np.zeros((j, k), dtype=complex)
    Cp = 0.5 * random_complex(rng, j, 2)
    Ap[j - 1] = D[0]
    for i in range(j - 1, 0, -1):
        Ap[i - 1] = Ap[i] @ B + Cp[i] @ D
    # row 0: [B', C'_0] @ [[A], [-D]] = A'_0 B
    G = np.vstack([A, -D])
    rhs = Ap[0] @ B
    sol, *_ = np.linalg.lstsq(G.T, rhs, rcond=None)
    ker = null_space(G.T)
    if ker.shape[1]:
        sol = sol + ker @ random_complex(rng, ker.shape[1])
    Bp = sol[:k].reshape(1, k)
    Cp[0] = sol[k:]
    return Ap, Bp, Cp


def generate_random(k: int, j: int, seed: int, *, zero_eigs: int = 0,
                    max_tries: int = 200, tol: float = 1e-12, max_entry: float = 20.0,
                    max_cond: float = 1e5) -> MonadData:
    """Random generic monad data, reproducible from ``seed`` (numpy PCG64).

    A is diagonalizable with separated eigenvalues; ``zero_eigs=1`` makes
    one of them zero (only allowed for j ≥ 1).  Candidates with entries
    above ``max_entry`` or cond(N) above ``max_cond`` are redrawn.
    """
    if k < 1:
        raise StructuralError("generate_random needs k >= 1", "k")
    if zero_eigs not in (0, 1):
        raise StructuralError("zero_eigs must be 0 or 1", "zero_eigs")
    if zero_eigs and j == 0:
        raise StructuralError("j = 0 requires invertible A", "zero_eigs")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        lam = _sample_eigenvalues(rng, k, zero_eigs)
        C0 = 0.5 * random_complex(rng, k, 2)
        D0 = np.zeros((2, k), dtype=complex)
        D0[0] = 0.5 * random_complex(rng, k)
        D0[1] = -C0[:, 0] * D0[0] / C0[:, 1]
        CD = C0 @ D0
        B0 = np.diag(0.7 * random_complex(rng, k))
        for a in range(k):
            for b in range(k):
                if a != b:
                    B0[a, b] = -CD[a, b] / (lam[a] - lam[b])
        P = random_well_conditioned(rng, k)
        Pi = np.linalg.inv(P)
        A, B, C, D = P @ np.diag(lam) @ Pi, P @ B0 @ Pi, P @ C0, D0 @ Pi
        if j:
            Ap, Bp, Cp = _solve_primed(rng, k, j, A, B, D)
        else:
            Ap, Bp, Cp = None, np.zeros((1, k)), None
        data = MonadData(k, j, A, B, C, D, Ap, Bp, Cp)
        if data.scale() > max_entry or not verify_monad_equations(data, tol).ok:
            continue
        rep = check_genericity(data)
        if rep.ok and rep.gencon4.detail["cond"] < max_cond:
            return data
    raise GenerationError(f"no generic data for k={k}, j={j}, seed={seed} in {max_tries} tries")


def _base_data(rng, k: int, j: int) -> MonadData:
    if k >= 1:
        return generate_random(k, j, int(rng.integers(2**31)))
    return MonadData(0, j, np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 2)),
                     np.zeros((2, 0)), np.zeros((j, 0)), np.zeros((1, 0)),
                     random_complex(rng, j, 2))


def plant_degenerate(k: int, j: int, seed: int, case: str = "gencon1"):
    """Data satisfying the monad equations but failing a genericity condition.

    ``case`` is ``"gencon1"`` (common eigenvector of A, B in ker D),
    ``"gencon2"`` (common left eigenvector annihilating C) or ``"both"``
    (a direct summand with C = D = 0).  Returns ``(data, x, y)`` where
    (x, y) is the planted failure point.
    """
    if case not in ("gencon1", "gencon2", "both"):
        raise StructuralError(f"unknown case {case!r}", "case")
    if k < 1:
        raise StructuralError("plant_degenerate needs k >= 1", "k")
    rng = np.random.default_rng(seed)
    base = _base_data(rng, k - 1, j)
    kb = k - 1
    Ab, Bb, Cb, Db = base.A, base.B, base.C, base.D
    Apb, Bpb, Cpb = base.Aprime, base.Bprime, base.Cprime
    eigs = np.linalg.eigvals(Ab) if kb else np.zeros(0)
    while True:
        y = complex(random_complex(rng, 1)[0])
        if abs(y) > 0.3 and (kb == 0 or np.min(np.abs(eigs - y)) > 0.3):
            break
    x = complex(random_complex(rng, 1)[0])
    Ik = np.eye(kb)

    A = np.zeros((k, k), dtype=complex)
    B = np.zeros((k, k), dtype=complex)
    A[:kb, :kb], B[:kb, :kb] = Ab, Bb
    A[kb, kb], B[kb, kb] = y, x
    C = np.zeros((k, 2), dtype=complex)
    D = np.zeros((2, k), dtype=complex)
    C[:kb], D[:, :kb] = Cb, Db
    Ap = np.zeros((j, k), dtype=complex)
    Bp = np.zeros((1, k), dtype=complex)
    Ap[:, :kb], Bp[:, :kb] = Apb, Bpb
    Cp = Cpb.copy()

    if case == "gencon1":
        a = random_complex(rng, 1, kb)
        c = random_complex(rng, 1, 2)
        b = (a @ (Bb - x * Ik) + c @ Db) @ np.linalg.inv(Ab - y * Ik) if kb else a
        A[kb, :kb], B[kb, :kb], C[kb] = a, b, c
    elif case == "gencon2":
        a = random_complex(rng, kb, 1)
        d = random_complex(rng, 2, 1)
        if j and abs(d[0, 0]) < 0.3:
            d[0, 0] = 1.0
        b = np.linalg.solve(Ab - y * Ik, (Bb - x * Ik) @ a - Cb @ d) if kb else a
        A[:kb, kb:], B[:kb, kb:], D[:, kb:] = a, b, d
        if j:
            rhs = Apb @ b + Cpb @ d
            rhs[0] -= (Bpb @ a)[0]
            ap = np.zeros(j, dtype=complex)
            ap[j - 1] = d[0, 0]
            for i in range(j - 1, 0, -1):
                ap[i - 1] = rhs[i, 0] + x * ap[i]
            Bp[0, kb] = (rhs[0, 0] + x * ap[0]) / y
            Ap[:, kb] = ap
    data = MonadData(k, j, A, B, C, D, Ap, Bp, Cp)
    g = random_well_conditioned(rng, k, 0.5)
    return gl_k_act(g, data), x, y
