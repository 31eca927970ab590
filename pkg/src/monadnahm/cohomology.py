"""Fiberwise evaluation of the four monads and cohomology of their twists.

Each monad is a complex of sums of line bundles on P¹×P¹

    O(-1,0)^a  --alpha-->  O(-1,1)^b ⊕ O^c  --beta-->  O(0,1)^d

whose middle cohomology is the bundle.  Entries of ``alpha`` and ``beta``
are affine in (x, y), so each map is stored as three coefficient matrices.

Cohomology dimensions are computed from the total complex of the Čech
bicomplex on the standard cover, sections being Laurent polynomials with
exponents in a box.  The Čech differential is contracted onto its harmonic
part one monomial at a time; the monad maps then act on the (small)
harmonic space through the perturbation formula ``pDi - pDhDi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._config import RANK_GAP, RANK_RTOL
from ._linalg import maxabs
from .errors import StructuralError, VerificationError, WindowInstabilityError
from .monad_core import MonadData, shift_pair

TAGS = ("E", "K0", "Kinf", "K0inf1")


@dataclass(frozen=True)
class TwistPair:
    p: int
    q: int


@dataclass(frozen=True)
class ChernClass:
    c1_H1: int
    c1_H2: int
    c2: int


def _tag(tag: str) -> str:
    if tag not in TAGS:
        raise StructuralError(f"unknown bundle tag {tag!r}; expected one of {TAGS}", "tag")
    return tag


def _twist(twist) -> TwistPair:
    if isinstance(twist, TwistPair):
        return twist
    p, q = twist
    return TwistPair(int(p), int(q))


# ---------------------------------------------------------------- monads

def monad_shapes(k: int, j: int, tag: str) -> tuple[int, int, int, int]:
    """(a, b, c, d) ranks of O(-1,0), O(-1,1), O, O(0,1)."""
    n = k + j
    return {
        "E": (k, k, k + 2, k),
        "K0": (n, n, n + 3, n + 1),
        "Kinf": (k, k, k + 3, k + 1),
        "K0inf1": (n, n, n + 2, n),
    }[_tag(tag)]


def _alpha_beta(data: MonadData, tag: str, x, y):
    k, j = data.k, data.j
    A, B, C, D = data.A, data.B, data.C, data.D
    C1, C2, D1, D2 = data.C1, data.C2, data.D1, data.D2
    I = np.eye(k)
    z = lambda r, c: np.zeros((r, c))
    if tag == "E":
        alpha = np.vstack([A - y * I, B - x * I, D])
        beta = np.hstack([x * I - B, A - y * I, C])
        return alpha, beta
    if tag == "Kinf" or (tag == "K0" and j == 0):
        if tag == "Kinf":
            row, last = D2, np.array([[0.0, -y]])
        else:
            if k and np.linalg.matrix_rank(A) < k:
                raise StructuralError("j = 0 requires invertible A", "A")
            row, last = D1 @ np.linalg.inv(A), np.array([[1.0, 0.0]])
        extra = D2 @ A if tag == "Kinf" else row
        alpha = np.vstack([A - y * I, B - x * I, D, extra])
        beta = np.block([
            [x * I - B, A - y * I, C, z(k, 1)],
            [-row, z(1, k), last, np.array([[1.0 if tag == "Kinf" else -y]])],
        ])
        return alpha, beta
    sp_ = shift_pair(j)
    s, ep = sp_.s, sp_.eplus
    J = np.eye(j)
    Bp0 = np.vstack([data.Bprime, z(j - 1, k)]) if j else z(0, k)
    Ap, C1p, C2p = data.Aprime, data.C1p, data.C2p
    if tag == "K0":
        alpha = np.block([
            [A - y * I, z(k, j)],
            [Ap, -y * J],
            [B - x * I, z(k, j)],
            [Bp0, s - x * J],
            [D, z(2, j)],
            [z(1, k), ep],
        ])
        beta = np.block([
            [x * I - B, z(k, j), A - y * I, z(k, j), C, z(k, 1)],
            [-Bp0, x * J - s, Ap, -y * J, data.Cprime, z(j, 1)],
            [z(1, k), -ep, z(1, k), z(1, j), np.array([[1.0, 0.0]]), np.array([[-y]])],
        ])
        return alpha, beta
    # K0inf1
    if j == 0:
        if k and np.linalg.matrix_rank(A) < k:
            raise StructuralError("j = 0 requires invertible A", "A")
        Ai = np.linalg.inv(A)
        Bt = B - C1 @ D1 @ Ai
        alpha = np.vstack([A - y * I, Bt - x * I, D2, D1 @ Ai])
        beta = np.hstack([x * I - Bt, A - y * I, C2, A @ C1])
        return alpha, beta
    alpha = np.block([
        [A - y * I, z(k, j)],
        [Ap, -y * J],
        [B - x * I, -C1 @ ep],
        [Bp0, s - x * J - C1p @ ep],
        [D2, z(1, j)],
        [z(1, k), ep],
    ])
    beta = np.block([
        [x * I - B, C1 @ ep, A - y * I, z(k, j), C2, A @ C1],
        [-Bp0, x * J - s + C1p @ ep, Ap, -y * J, C2p, Ap @ C1],
    ])
    return alpha, beta


def monad_coefficients(data: MonadData, tag: str):
    """Coefficient triples (const, x, y) of the monad maps alpha and beta."""
    _tag(tag)
    a00, b00 = _alpha_beta(data, tag, 0.0, 0.0)
    a10, b10 = _alpha_beta(data, tag, 1.0, 0.0)
    a01, b01 = _alpha_beta(data, tag, 0.0, 1.0)
    return (a00, a10 - a00, a01 - a00), (b00, b10 - b00, b01 - b00)


def monad_at_point(data: MonadData, tag: str, x, y):
    """The two monad matrices at (x, y); ``np.inf`` selects the chart at infinity."""
    _tag(tag)
    if not (np.isinf(x) or np.isinf(y)):
        return tuple(m.astype(complex) for m in _alpha_beta(data, tag, complex(x), complex(y)))
    (a0, ax, ay), (b0, bx, by) = monad_coefficients(data, tag)
    b = monad_shapes(data.k, data.j, tag)[1]
    # alpha raises the y-degree into the first b rows and the x-degree below;
    # beta raises the x-degree from the first b columns and the y-degree after
    alpha_x = np.zeros(a0.shape, bool)
    alpha_x[b:] = True
    beta_x = np.zeros(b0.shape, bool)
    beta_x[:, :b] = True
    return (_homogenize(a0, ax, ay, alpha_x, x, y),
            _homogenize(b0, bx, by, beta_x, x, y))


def _homogenize(M0, Mx, My, x_mask, x, y):
    out = np.array(M0, dtype=complex)
    for mask, Mv, v in ((x_mask, Mx, x), (~x_mask, My, y)):
        out[mask] = Mv[mask] if np.isinf(v) else out[mask] + v * Mv[mask]
    return out


def fiber_dim(data: MonadData, tag: str, x, y) -> int:
    """dim ker(beta) - rank(alpha) at a point: the fiber dimension of the cohomology sheaf."""
    alpha, beta = monad_at_point(data, tag, x, y)
    scale = max(1.0, maxabs(alpha), maxabs(beta))
    ra = int(np.sum(np.linalg.svd(alpha, compute_uv=False) > RANK_RTOL * scale)) if alpha.size else 0
    rb = int(np.sum(np.linalg.svd(beta, compute_uv=False) > RANK_RTOL * scale)) if beta.size else 0
    return alpha.shape[0] - rb - ra


# ---------------------------------------------------------------- closed forms

def chern_class(k: int, j: int, tag: str) -> ChernClass:
    n = k + j
    return {
        "E": ChernClass(0, 0, k),
        "K0": ChernClass(0, -1, n),
        "Kinf": ChernClass(0, -1, k),
        "K0inf1": ChernClass(0, -2, n),
    }[_tag(tag)]


def riemann_roch(c: ChernClass, rank: int, p: int, q: int) -> int:
    """χ(F(p,q)) on P¹×P¹ for F of the given rank and Chern class."""
    a, b = c.c1_H1, c.c1_H2
    chi = (2 * a * b) // 2 - c.c2 + (a + b) + rank
    return chi + rank * (p + q) + p * b + q * a + rank * p * q


def chern_euler(k: int, j: int, tag: str, twist) -> tuple[ChernClass, int]:
    t = _twist(twist)
    p, q = t.p, t.q
    chi = {
        "E": -k + 2 + 2 * (p + q) + 2 * p * q,
        "K0": -(k + j) + (1 + p) * (1 + 2 * q),
        "Kinf": -k + (1 + p) * (1 + 2 * q),
        "K0inf1": -(k + j) + 2 * q * (1 + p),
    }[_tag(tag)]
    return chern_class(k, j, tag), chi


OUTSIDE = "outside-region"


def vanishing_h1(k: int, j: int, tag: str, twist):
    t = _twist(twist)
    p, q = t.p, t.q
    tag = _tag(tag)
    if tag == "E":
        if (p <= -1 and q >= -1) or (p >= -1 and q <= -1):
            return k - 2 * (1 + q) * (1 + p)
        return OUTSIDE
    if tag in ("K0", "Kinf"):
        n = k + j if tag == "K0" else k
        if (p <= -1 and q >= 0) or (p >= -1 and q <= -1):
            return n - (1 + 2 * q) * (1 + p)
        if tag == "K0" and j >= 1 and q == 0 and p <= j - 1:
            return k + j - 1 - p
        return OUTSIDE
    if (p <= -1 and q >= 0) or (p >= -1 and q <= 0):
        return k + j - 2 * q * (1 + p)
    return OUTSIDE


def vanishing_predictions(k: int, j: int, tag: str, twist) -> dict[str, int]:
    """All cohomology dimensions the vanishing statements pin down at this twist."""
    t = _twist(twist)
    p, q = t.p, t.q
    out = {}
    q0 = 0 if tag == "K0inf1" else -1
    if p <= -1 or q <= q0:
        out["h0"] = 0
    if tag == "E":
        if p >= -1 or q >= -1:
            out["h2"] = 0
    elif p >= -1 or q >= 0:
        out["h2"] = 0
    if tag == "K0" and j >= 1 and q == 0 and p <= j - 1:
        out["h0"] = 0
    h1 = vanishing_h1(k, j, tag, t)
    if h1 != OUTSIDE:
        out["h1"] = h1
    return out


# ---------------------------------------------------------------- Čech oracle

# local Čech pieces along one P¹ factor: 0 -> chart U0, 1 -> chart U1, 2 -> overlap
_KINDS = ("both", "u0", "u1", "mid")


def _kind_codes(deg: int, W: int) -> np.ndarray:
    m = np.arange(-W, W + 1)
    in0, in1 = m >= 0, m <= deg
    return np.where(in0 & in1, 0, np.where(in0, 1, np.where(in1, 2, 3)))


def _pieces(kind: int) -> tuple[int, ...]:
    return ((0, 1, 2), (0, 2), (1, 2), (2,))[kind]


@lru_cache(maxsize=None)
def _local_block(kx: int, ky: int, sign: int):
    """Čech differential on one monomial: basis, pinv, harmonic vectors."""
    basis = [(a, b) for a in _pieces(kx) for b in _pieces(ky)]
    pos = {e: n for n, e in enumerate(basis)}
    d = np.zeros((len(basis), len(basis)))
    for n, (a, b) in enumerate(basis):
        if a != 2:
            d[pos[(2, b)], n] += sign * (-1.0 if a == 0 else 1.0)
        if b != 2:
            rx = 1 if a == 2 else 0
            d[pos[(a, 2)], n] += sign * (-1) ** rx * (-1.0 if b == 0 else 1.0)
    pinv = np.linalg.pinv(d)
    u, sv, vh = np.linalg.svd(np.vstack([d, d.T]))
    r = int(np.sum(sv > 1e-12))
    harm = vh[r:].T
    cech_deg = np.array([(a == 2) + (b == 2) for a, b in basis])
    return basis, pinv, harm, cech_deg


@dataclass
class _TypeStructure:
    size: int
    index: np.ndarray  # (3, 3, L, L) -> local index or -1
    h: sp.csr_matrix
    i: sp.csr_matrix
    harm_deg: np.ndarray  # Čech degree of each harmonic vector


@lru_cache(maxsize=None)
def _type_structure(degx: int, degy: int, n: int, W: int) -> _TypeStructure:
    L = 2 * W + 1
    m = np.arange(-W, W + 1)
    vx = np.stack([m >= 0, m <= degx, np.ones(L, bool)])
    vy = np.stack([m >= 0, m <= degy, np.ones(L, bool)])
    valid = vx[:, None, :, None] & vy[None, :, None, :]
    index = np.full(valid.shape, -1, dtype=np.int64)
    size = int(valid.sum())
    index[valid] = np.arange(size)

    kx, ky = _kind_codes(degx, W), _kind_codes(degy, W)
    sign = (-1) ** (n % 2)
    h_rows, h_cols, h_vals = [], [], []
    i_rows, i_cols, i_vals, hdeg = [], [], [], []
    ncol = 0
    for a in range(4):
        mxs = np.nonzero(kx == a)[0]
        if not len(mxs):
            continue
        for b in range(4):
            mys = np.nonzero(ky == b)[0]
            if not len(mys):
                continue
            basis, pinv, harm, cdeg = _local_block(a, b, sign)
            MX, MY = np.meshgrid(mxs, mys, indexing="ij")
            MX, MY = MX.ravel(), MY.ravel()
            G = np.stack([index[px, py, MX, MY] for px, py in basis], axis=1)
            r, c = np.nonzero(np.abs(pinv) > 1e-14)
            h_rows.append(G[:, r].ravel())
            h_cols.append(G[:, c].ravel())
            h_vals.append(np.tile(pinv[r, c], len(MX)))
            for hv in harm.T:
                nz = np.nonzero(np.abs(hv) > 1e-14)[0]
                cols = ncol + np.arange(len(MX))
                i_rows.append(G[:, nz].ravel())
                i_cols.append(np.repeat(cols, len(nz)))
                i_vals.append(np.tile(hv[nz], len(MX)))
                hdeg.append(np.full(len(MX), int(cdeg[nz[0]])))
                ncol += len(MX)
    cat = lambda xs, dt=float: np.concatenate(xs) if xs else np.zeros(0, dt)
    h = sp.csr_matrix((cat(h_vals), (cat(h_rows, int), cat(h_cols, int))), shape=(size, size))
    i = sp.csr_matrix((cat(i_vals), (cat(i_rows, int), cat(i_cols, int))), shape=(size, ncol))
    return _TypeStructure(size, index, h, i, cat(hdeg, int))


@lru_cache(maxsize=None)
def _shift_matrix(src: tuple, tgt: tuple, dx: int, dy: int, W: int) -> sp.csr_matrix:
    """Multiplication by x^dx y^dy from one line-bundle type to another, in the box."""
    S, T = _type_structure(*src, W), _type_structure(*tgt, W)
    px, py, mx, my = np.nonzero(S.index >= 0)
    src_idx = S.index[px, py, mx, my]
    tx, ty = mx + dx, my + dy
    keep = (tx < 2 * W + 1) & (ty < 2 * W + 1)
    tgt_idx = T.index[px[keep], py[keep], tx[keep], ty[keep]]
    if np.any(tgt_idx < 0):
        raise AssertionError("monad map left its chart")
    return sp.csr_matrix(
        (np.ones(len(tgt_idx)), (tgt_idx, src_idx[keep])), shape=(T.size, S.size)
    )


_SHIFTS = ((0, 0), (1, 0), (0, 1))


def _allowed(src: tuple, tgt: tuple, dx: int, dy: int) -> bool:
    """Whether x^dx y^dy is a section of the degree difference tgt - src."""
    return dx <= tgt[0] - src[0] and dy <= tgt[1] - src[1]


def _check_coefficients(mats, src: tuple, tgt: tuple, scale: float):
    for cidx, (dx, dy) in enumerate(_SHIFTS):
        if not _allowed(src, tgt, dx, dy) and maxabs(mats[cidx]) > 1e-12 * scale:
            raise StructuralError("monad map has a monomial of the wrong degree", "tag")


@lru_cache(maxsize=None)
def _first_order(src: tuple, tgt: tuple, W: int):
    S, T = _type_structure(*src, W), _type_structure(*tgt, W)
    out = []
    for dx, dy in _SHIFTS:
        if not _allowed(src, tgt, dx, dy):
            out.append(None)
            continue
        Sh = _shift_matrix(src, tgt, dx, dy, W)
        out.append((T.i.T @ (Sh @ S.i)).toarray())
    return out


@lru_cache(maxsize=None)
def _second_order(src: tuple, mid: tuple, tgt: tuple, W: int):
    S, Mi, T = (_type_structure(*t, W) for t in (src, mid, tgt))
    out = {}
    for c1, (dx1, dy1) in enumerate(_SHIFTS):
        if not _allowed(src, mid, dx1, dy1):
            continue
        first = Mi.h @ (_shift_matrix(src, mid, dx1, dy1, W) @ S.i)
        for c2, (dx2, dy2) in enumerate(_SHIFTS):
            if not _allowed(mid, tgt, dx2, dy2):
                continue
            out[c1, c2] = (T.i.T @ (_shift_matrix(mid, tgt, dx2, dy2, W) @ first)).toarray()
    return out


def _types(k: int, j: int, tag: str, p: int, q: int):
    """Line-bundle types (degx, degy, monad degree) for the twisted monad."""
    if tag == "K0inf1":
        q = q - 1
    return {
        "src": (p - 1, q, -1),
        "b": (p - 1, q + 1, 0),
        "c": (p, q, 0),
        "tgt": (p, q + 1, 1),
    }


def _rank(M: np.ndarray, thr: float) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    r = int(np.sum(sv > thr))
    accepted = sv[r - 1] if r else np.inf
    rejected = sv[r] if r < len(sv) else 0.0
    if rejected > 0 and accepted / rejected < RANK_GAP:
        raise VerificationError(
            "indeterminate rank in the Čech computation", "cech_rank",
            {"accepted": float(accepted), "rejected": float(rejected)},
        )
    if r == len(sv) and sv[-1] < RANK_GAP * thr:
        raise VerificationError("indeterminate rank in the Čech computation", "cech_rank")
    return r


def _reduced_differential(data: MonadData, tag: str, p: int, q: int, W: int):
    (a0, ax, ay), (b0, bx, by) = monad_coefficients(data, tag)
    a, b, c, d = monad_shapes(data.k, data.j, tag)
    ty = _types(data.k, data.j, tag, p, q)
    counts = {"src": a, "b": b, "c": c, "tgt": d}
    order = ("src", "b", "c", "tgt")
    alpha = {"b": [m[:b] for m in (a0, ax, ay)], "c": [m[b:] for m in (a0, ax, ay)]}
    beta = {"b": [m[:, :b] for m in (b0, bx, by)], "c": [m[:, b:] for m in (b0, bx, by)]}

    structs = {name: _type_structure(*ty[name], W) for name in order}
    dims = {name: counts[name] * structs[name].i.shape[1] for name in order}
    offs = dict(zip(order, np.cumsum([0] + [dims[nm] for nm in order[:-1]])))
    total = sum(dims.values())
    dH = np.zeros((total, total), dtype=complex)

    def put(src, tgt, block):
        dH[offs[tgt]:offs[tgt] + dims[tgt], offs[src]:offs[src] + dims[src]] += block

    def key(name):
        return tuple(ty[name][:2]) + (ty[name][2],)

    scale = max(1.0, data.scale()) ** 2
    for mid in ("b", "c"):
        if counts[mid] == 0:
            continue
        _check_coefficients(alpha[mid], key("src"), key(mid), scale)
        _check_coefficients(beta[mid], key(mid), key("tgt"), scale)
        for cidx, phi in enumerate(_first_order(key("src"), key(mid), W)):
            if counts["src"] and phi is not None:
                put("src", mid, np.kron(alpha[mid][cidx], phi))
        for cidx, phi in enumerate(_first_order(key(mid), key("tgt"), W)):
            if counts["tgt"] and phi is not None:
                put(mid, "tgt", np.kron(beta[mid][cidx], phi))
        if counts["src"] and counts["tgt"]:
            second = _second_order(key("src"), key(mid), key("tgt"), W)
            for (c1, c2), psi in second.items():
                coeff = beta[mid][c2] @ alpha[mid][c1]
                if np.any(coeff) and np.any(psi):
                    put("src", "tgt", -np.kron(coeff, psi))

    deg = np.concatenate([
        np.tile(structs[nm].harm_deg + ty[nm][2], counts[nm]) for nm in order
    ]).astype(int)
    return dH, deg


def _dims_from_reduced(dH: np.ndarray, deg: np.ndarray, scale: float) -> tuple[int, int, int]:
    thr = RANK_RTOL * max(scale, maxabs(dH), 1.0)
    ranks = {}
    for t in range(-1, 3):
        src, tgt = deg == t, deg == t + 1
        ranks[t] = _rank(dH[np.ix_(tgt, src)], thr)
    h = []
    for t in range(-1, 4):
        h.append(int(np.sum(deg == t)) - ranks.get(t, 0) - ranks.get(t - 1, 0))
    if h[0] != 0 or h[4] != 0:
        raise VerificationError("hypercohomology outside degrees 0..2", "cech_range",
                                {"h_minus1": h[0], "h3": h[4]})
    return h[1], h[2], h[3]


def cech_cohomology_dims(data: MonadData, tag: str, twist, window: int | None = None,
                         check_stability: bool = True) -> tuple[int, int, int]:
    """(h0, h1, h2) of the bundle twisted by ``twist``.

    ``window`` bounds the Laurent exponents; the result is recomputed at
    ``window + 1`` and must agree.
    """
    tag = _tag(tag)
    t = _twist(twist)
    W = max(abs(t.p), abs(t.q)) + 3 if window is None else int(window)
    if W < max(abs(t.p), abs(t.q)) + 2:
        raise StructuralError(f"window {W} too small for twist ({t.p}, {t.q})", "window")
    scale = data.scale() ** 2
    dH, deg = _reduced_differential(data, tag, t.p, t.q, W)
    sq = dH @ dH
    if maxabs(sq) > 1e-8 * max(1.0, maxabs(dH)) ** 2:
        raise VerificationError("reduced differential does not square to zero; "
                                "the data may violate the monad equations", "cech_d2",
                                {"residual": maxabs(sq)})
    h = _dims_from_reduced(dH, deg, scale)
    if check_stability:
        h2 = _dims_from_reduced(*_reduced_differential(data, tag, t.p, t.q, W + 1), scale)
        if h2 != h:
            raise WindowInstabilityError(
                f"cohomology changed from {h} to {h2} when the window grew past {W}; "
                "use a larger window"
            )
    return h


def cech_cohomology_dims_dense(data: MonadData, tag: str, twist, window: int) -> tuple[int, int, int]:
    """Same dimensions from dense ranks of the full truncated total complex.

    Slow; meant for cross-checking the reduced computation on small cases.
    """
    tag = _tag(tag)
    t = _twist(twist)
    W = int(window)
    (a0, ax, ay), (b0, bx, by) = monad_coefficients(data, tag)
    a, b, c, d = monad_shapes(data.k, data.j, tag)
    ty = _types(data.k, data.j, tag, t.p, t.q)
    summands = [ty["src"]] * a + [ty["b"]] * b + [ty["c"]] * c + [ty["tgt"]] * d
    structs = [_type_structure(*s, W) for s in summands]
    offs = np.cumsum([0] + [s.size for s in structs])
    N = int(offs[-1])
    blocks = [[None] * len(summands) for _ in summands]
    totdeg = []
    for n_, (s, st) in enumerate(zip(summands, structs)):
        px, py, mx, my = np.nonzero(st.index >= 0)
        order = np.argsort(st.index[px, py, mx, my])
        totdeg.append(s[2] + (px[order] == 2) + (py[order] == 2))
        # Čech differential with the (-1)^n sign: invert h's pinv structure
        delta = sp.lil_matrix((st.size, st.size))
        sign = (-1) ** (s[2] % 2)
        idx = st.index
        for e in range(len(px)):
            u, v, xx, yy = px[e], py[e], mx[e], my[e]
            src = idx[u, v, xx, yy]
            if u != 2:
                delta[idx[2, v, xx, yy], src] += sign * (-1.0 if u == 0 else 1.0)
            if v != 2:
                rx = 1 if u == 2 else 0
                delta[idx[u, 2, xx, yy], src] += sign * (-1) ** rx * (-1.0 if v == 0 else 1.0)
        blocks[n_][n_] = delta.tocsr()
    maps = [(0, a, a, a + b + c, (a0, ax, ay)), (a, a + b + c, a + b + c, a + b + c + d, (b0, bx, by))]
    for s0, s1, t0, t1, mats in maps:
        for cidx, (dx, dy) in enumerate(_SHIFTS):
            Mc = mats[cidx]
            for si in range(s0, s1):
                for ti in range(t0, t1):
                    val = Mc[ti - t0, si - s0]
                    if val != 0 and _allowed(summands[si], summands[ti], dx, dy):
                        Sh = _shift_matrix(summands[si][:2] + (summands[si][2],),
                                           summands[ti][:2] + (summands[ti][2],), dx, dy, W)
                        cur = blocks[ti][si]
                        blocks[ti][si] = val * Sh if cur is None else cur + val * Sh
    for r in range(len(summands)):
        for cc in range(len(summands)):
            if blocks[r][cc] is None:
                blocks[r][cc] = sp.csr_matrix((structs[r].size, structs[cc].size))
    dtot = sp.bmat(blocks).tocsr().astype(complex)
    deg = np.concatenate(totdeg)
    thr = RANK_RTOL * max(1.0, data.scale() ** 2)
    ranks = {}
    for tt in range(-1, 3):
        src, tgt = np.nonzero(deg == tt)[0], np.nonzero(deg == tt + 1)[0]
        ranks[tt] = _rank(dtot[tgt][:, src].toarray(), thr)
    h = [int(np.sum(deg == tt)) - ranks.get(tt, 0) - ranks.get(tt - 1, 0) for tt in range(0, 3)]
    return tuple(h)


def restriction_splitting(data: MonadData, y0: complex) -> tuple[int, int]:
    """(n, dim coker(A - y0)) for the restriction of E to P¹×{y0}."""
    k = data.k
    if k == 0:
        return 0, 0
    M = data.A - complex(y0) * np.eye(k)
    scale = max(1.0, maxabs(data.A))
    sv = np.linalg.svd(M, compute_uv=False)
    n = int(np.sum(sv <= RANK_RTOL * scale))
    return n, n
