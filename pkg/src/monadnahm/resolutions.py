"""Pencil resolutions of the direct-image sheaves on P¹ and the maps between them.

Every sheaf here is the cokernel of a map O(-1)^a -> O^b given by a pencil
``x*P1 + P0``.  ``P0``/``Pinf`` are line bundles at infinity (b = a + 1);
``Q0inf``/``Qinf0`` are torsion (b = a) and supported on pencil eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import cluster_values, maxabs, null_space, orth
from .errors import StructuralError, VerificationError
from .monad_core import MonadData, build_M, build_MN, build_N_prime, shift_pair

LABELS = ("P0", "Pinf", "Q0inf", "Qinf0")


@dataclass(frozen=True)
class SheafResolution:
    label: str
    P0: np.ndarray
    P1: np.ndarray

    @property
    def a_rank(self) -> int:
        return self.P0.shape[1]

    @property
    def b_rank(self) -> int:
        return self.P0.shape[0]

    def at(self, x) -> np.ndarray:
        return self.P0 + x * self.P1


@dataclass(frozen=True)
class ChainMap:
    source: str
    target: str
    left: np.ndarray   # between the O(-1) columns
    right: np.ndarray  # between the O rows


@dataclass(frozen=True)
class ChainMapSet:
    p0_to_q0inf: ChainMap
    pinf_to_q0inf: ChainMap
    pinf_to_qinf0: ChainMap
    p0_to_qinf0: ChainMap

    def __iter__(self):
        return iter((self.p0_to_q0inf, self.pinf_to_q0inf, self.pinf_to_qinf0, self.p0_to_qinf0))


def _bp0(data: MonadData) -> np.ndarray:
    return np.vstack([data.Bprime, np.zeros((data.j - 1, data.k))]) if data.j else np.zeros((0, data.k))


def torsion_matrix(data: MonadData, label: str) -> np.ndarray:
    """T with the torsion sheaf resolved by x - T.

    For j = 0 the sheaf Q0inf is resolved by x - B̃ with B̃ = B - C₁D₁A⁻¹.
    """
    if label == "Qinf0":
        return np.asarray(data.B)
    if label != "Q0inf":
        raise StructuralError(f"{label!r} is not a torsion sheaf; use 'Q0inf' or 'Qinf0'", "label")
    if data.j == 0:
        return data.B - data.C1 @ data.D1 @ _inv_A(data)
    return build_M(data)


def _inv_A(data: MonadData) -> np.ndarray:
    if data.k and np.linalg.matrix_rank(data.A) < data.k:
        raise StructuralError("j = 0 requires invertible A", "A")
    return np.linalg.inv(data.A)


def resolution_matrices(data: MonadData) -> tuple[dict[str, SheafResolution], ChainMapSet]:
    k, j = data.k, data.j
    n = k + j
    sp_ = shift_pair(j)
    Bp0 = _bp0(data)
    last = -data.D1 @ _inv_A(data) if j == 0 else np.hstack([np.zeros((1, k)), -sp_.eplus])
    P0 = SheafResolution(
        "P0",
        np.block([[-data.B, np.zeros((k, j))], [-Bp0, -sp_.s], [last]]),
        np.vstack([np.eye(n), np.zeros((1, n))]),
    )
    Q0inf = SheafResolution("Q0inf", -torsion_matrix(data, "Q0inf"), np.eye(n))
    Pinf = SheafResolution("Pinf", np.vstack([-data.B, -data.D2]), np.vstack([np.eye(k), np.zeros((1, k))]))
    Qinf0 = SheafResolution("Qinf0", -data.B, np.eye(k))

    proj_k = np.hstack([np.eye(k), np.zeros((k, j))])
    maps = ChainMapSet(
        ChainMap("P0", "Q0inf", np.eye(n),
                 np.block([[np.eye(k), np.zeros((k, j)), -data.C1],
                           [np.zeros((j, k)), np.eye(j), -data.C1p]])),
        ChainMap("Pinf", "Q0inf", np.vstack([data.A, data.Aprime]),
                 np.block([[data.A, data.C2], [data.Aprime, data.C2p]])),
        ChainMap("Pinf", "Qinf0", np.eye(k), np.hstack([np.eye(k), np.zeros((k, 1))])),
        ChainMap("P0", "Qinf0", proj_k, np.hstack([np.eye(k), np.zeros((k, j + 1))])),
    )
    return {"P0": P0, "Pinf": Pinf, "Q0inf": Q0inf, "Qinf0": Qinf0}, maps


def commutation_residuals(resolutions: dict[str, SheafResolution], maps: ChainMapSet) -> dict[str, float]:
    """Coefficient-wise max residual of target(x)∘left - right∘source(x) for every square."""
    out = {}
    for m in maps:
        src, tgt = resolutions[m.source], resolutions[m.target]
        r0 = tgt.P0 @ m.left - m.right @ src.P0
        r1 = tgt.P1 @ m.left - m.right @ src.P1
        out[f"{m.source}->{m.target}"] = max(maxabs(r0), maxabs(r1))
    return out


@dataclass(frozen=True)
class TorsionSupport:
    points: np.ndarray
    residuals: np.ndarray


def torsion_support(data: MonadData, label: str) -> TorsionSupport:
    """Support points, with multiplicity, and σ_min(x - T)/scale at each."""
    T = torsion_matrix(data, label)
    pts = np.linalg.eigvals(T) if T.size else np.zeros(0, dtype=complex)
    pts = pts[np.lexsort((pts.imag, pts.real))]
    scale = max(1.0, float(np.linalg.norm(T, 2)) if T.size else 1.0)
    n = T.shape[0]
    res = np.array([np.linalg.svd(x * np.eye(n) - T, compute_uv=False)[-1] / scale for x in pts])
    return TorsionSupport(pts, res)


def twist_resolution(res: SheafResolution, ell: int) -> SheafResolution:
    """Resolution of F(ℓ) from one of F with pencil [x + α; β]."""
    if ell < 0:
        raise StructuralError("twist_resolution needs ℓ >= 0", "ell")
    if res.label in ("Q0inf", "Qinf0") or res.b_rank != res.a_rank + 1:
        raise StructuralError(f"cannot twist the torsion resolution {res.label}", "label")
    a = res.a_rank
    if maxabs(res.P1 - np.vstack([np.eye(a), np.zeros((1, a))])) > 0:
        raise StructuralError("pencil is not of the form [x + α; β]", "P1")
    if ell == 0:
        return res
    alpha, beta = res.P0[:a], res.P0[a:]
    sp_ = shift_pair(ell)
    P0 = np.block([
        [alpha, np.zeros((a, ell))],
        [np.vstack([beta, np.zeros((ell - 1, a))]), -sp_.s],
        [np.zeros((1, a)), -sp_.eplus],
    ])
    P1 = np.vstack([np.eye(a + ell), np.zeros((1, a + ell))])
    return SheafResolution(res.label, P0, P1)


def twisted_diagram_residual(data: MonadData) -> float:
    """Residual of Q0inf(x)∘N' = N∘(Pinf twisted by j-1)(x), coefficient-wise."""
    if data.j < 1:
        raise StructuralError("the twisted diagram needs j >= 1", "j")
    res, _ = resolution_matrices(data)
    tw = twist_resolution(res["Pinf"], data.j - 1)
    _, N = build_MN(data)
    Np = build_N_prime(data)
    q = res["Q0inf"]
    return max(maxabs(q.P0 @ Np - N @ tw.P0), maxabs(q.P1 @ Np - N @ tw.P1))


def intertwined_columns(data: MonadData) -> tuple[np.ndarray, np.ndarray]:
    """[C̃₁; C̃′₁] = −N⁻¹Mʲ[C₂; C′₂], split into its k and j parts.

    The sign makes the last column of (−M)N = Nβ̃ hold.
    """
    k, j = data.k, data.j
    M, N = build_MN(data)
    if np.linalg.matrix_rank(N) < k + j:
        raise VerificationError("N is singular (gencon4 fails)", "gencon4")
    c = -np.linalg.solve(N, np.linalg.matrix_power(M, j) @ np.vstack([data.C2, data.C2p]))
    return c[:k], c[k:]


def intertwined_beta(data: MonadData) -> np.ndarray:
    """[[−B, C̃₁e₊], [[−D₂;0], −s + C̃′₁e₊]]."""
    k, j = data.k, data.j
    if j < 1:
        raise StructuralError("intertwining is defined for j >= 1", "j")
    c1, c1p = intertwined_columns(data)
    sp_ = shift_pair(j)
    D2_0 = np.vstack([data.D2, np.zeros((j - 1, k))])
    return np.block([
        [-data.B, c1 @ sp_.eplus],
        [-D2_0, -sp_.s + c1p @ sp_.eplus],
    ])


def verify_intertwining(data: MonadData) -> float:
    """max |(−M)N − N β̃|."""
    M, N = build_MN(data)
    bt = intertwined_beta(data)
    return maxabs(-M @ N - N @ bt)


# ---------------------------------------------------------------- reducibility

@dataclass(frozen=True)
class ReducibilityWitness:
    x: complex
    case: str  # "Case1" or "Case2"
    y: complex
    vector: np.ndarray
    residual: float


def _invariant_part(V: np.ndarray, T: np.ndarray, scale: float) -> np.ndarray:
    """Largest T-invariant subspace of span(V)."""
    n = T.shape[0]
    while V.shape[1]:
        W = (np.eye(n) - V @ V.conj().T) @ T @ V
        if maxabs(W) <= 1e-9 * scale:
            break
        Z = null_space(W, rtol=1e-7)
        if Z.shape[1] == V.shape[1]:
            break
        V = orth(V @ Z)
    return V


def _case1(data: MonadData, x: complex, scale: float):
    k = data.k
    res, _ = resolution_matrices(data)
    V = null_space(np.vstack([data.B - x * np.eye(k), data.D]), rtol=1e-7)
    V = _invariant_part(V, data.A, scale)
    if not V.shape[1]:
        return None
    ys, vecs = np.linalg.eig(V.conj().T @ data.A @ V)
    v = V @ vecs[:, 0]
    v /= np.linalg.norm(v)
    lifted = np.concatenate([data.A @ v, data.Aprime @ v])
    parts = [
        res["Qinf0"].at(x) @ v,
        res["Pinf"].at(x) @ v,
        res["P0"].at(x) @ lifted,
        res["Q0inf"].at(x) @ lifted,
        data.A @ v - ys[0] * v,
    ]
    r = max(maxabs(p) for p in parts) / scale
    return ReducibilityWitness(complex(x), "Case1", complex(ys[0]), v, r)


def _case2(data: MonadData, x: complex, scale: float):
    k = data.k
    V = null_space(np.vstack([(data.B - x * np.eye(k)).T, data.C.T]), rtol=1e-7)
    V = _invariant_part(V, data.A.T, scale)
    if not V.shape[1]:
        return None
    ys, vecs = np.linalg.eig(V.conj().T @ data.A.T @ V)
    w = V @ vecs[:, 0]
    w /= np.linalg.norm(w)
    parts = [w @ (x * np.eye(k) - data.B), w @ data.C, w @ data.A - ys[0] * w]
    r = max(maxabs(p) for p in parts) / scale
    return ReducibilityWitness(complex(x), "Case2", complex(ys[0]), w, r)


def reducibility_scan(data: MonadData, tol: float = 1e-8) -> list[ReducibilityWitness]:
    """Points of supp(Qinf0) where the resolution diagram has an invariant line
    (Case1) or an invariant hyperplane (Case2)."""
    if data.k == 0:
        return []
    scale = max(1.0, data.scale())
    out = []
    for x in cluster_values(np.linalg.eigvals(data.B), 1e-6 * scale):
        for finder in (_case1, _case2):
            w = finder(data, x, scale)
            if w is not None and w.residual <= tol:
                out.append(w)
    return out
