"""Small numerical linear algebra helpers with explicit rank verdicts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._config import RANK_GAP, RANK_RTOL


@dataclass(frozen=True)
class RankDecision:
    rank: int
    determinate: bool
    singular_values: np.ndarray
    threshold: float


def rank_decision(M, rtol: float = RANK_RTOL, gap: float = RANK_GAP) -> RankDecision:
    """Numerical rank with a gap test.

    A singular value counts when it exceeds ``rtol`` times the largest one.
    The verdict is indeterminate when the last accepted and first rejected
    values are less than ``gap`` apart, or when nothing is rejected but the
    smallest accepted value sits within ``gap`` of the threshold.
    """
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return RankDecision(0, True, np.zeros(0), 0.0)
    sv = np.linalg.svd(M, compute_uv=False)
    top = sv[0]
    if top == 0.0:
        return RankDecision(0, True, sv, 0.0)
    thr = rtol * top
    r = int(np.sum(sv > thr))
    if r < len(sv):
        rejected = sv[r]
        determinate = rejected == 0.0 or sv[r - 1] / rejected >= gap
    else:
        determinate = sv[-1] >= gap * thr
    return RankDecision(r, bool(determinate), sv, thr)


def null_space(M, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the right kernel of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, sv, vh = np.linalg.svd(M)
    top = sv[0] if len(sv) else 0.0
    r = int(np.sum(sv > rtol * top)) if top > 0 else 0
    return vh[r:].conj().T


def left_null_space(M, rtol: float = RANK_RTOL) -> np.ndarray:
    """Rows w with w @ M = 0, orthonormal."""
    return null_space(np.asarray(M).T, rtol).T


def orth(V: np.ndarray) -> np.ndarray:
    if V.shape[1] == 0:
        return V
    q, _ = np.linalg.qr(V)
    return q


def cluster_values(values, tol: float) -> list[complex]:
    """Group nearly equal complex numbers; return the cluster means."""
    remaining = [complex(v) for v in values]
    out = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        rest = []
        for v in remaining:
            (group if abs(v - seed) <= tol else rest).append(v)
        remaining = rest
        out.append(complex(np.mean(group)))
    return out


def maxabs(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_well_conditioned(rng: np.random.Generator, n: int, spread: float = 1.0) -> np.ndarray:
    """Random complex matrix with condition number at most exp(2*spread)."""
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    sv = np.exp(rng.uniform(-spread, spread, n))
    return random_unitary(rng, n) @ np.diag(sv) @ random_unitary(rng, n)
