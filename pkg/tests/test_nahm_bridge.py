from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import k1j0, k1j1
from monadnahm.errors import StructuralError, VerificationError
from monadnahm.monad_core import (
    build_MN, check_genericity, generate_random, verify_monad_equations,
)
from monadnahm.nahm_bridge import (
    GaugePath, PathSpec, boundary_invariants, expected_residues, from_nahm_complex, gauge_act,
    normal_form, pole_profile, to_nahm_complex, verify_nahm_complex,
)
from monadnahm.resolutions import torsion_support

CASES = [(1, 0), (2, 0), (3, 0), (1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (2, 3), (1, 4)]


def _spectrum_gap(X, Y):
    a, b = np.linalg.eigvals(X), np.linalg.eigvals(Y)
    return max(np.abs(a[:, None] - b[None, :]).min(axis=1).max(),
               np.abs(b[:, None] - a[None, :]).min(axis=1).max())


@pytest.fixture(scope="module")
def complexes():
    out = {}
    for k, j in CASES:
        d = generate_random(k, j, seed=3 * k + j)
        out[(k, j)] = (d, to_nahm_complex(d))
    return out


def test_all_checks_pass(complexes):
    for (k, j), (_, ncd) in complexes.items():
        rep = verify_nahm_complex(ncd, tol=1e-8)
        assert rep.ok, ((k, j), rep.failures())


def test_gluing_exact(complexes):
    for (k, j), (_, ncd) in complexes.items():
        assert np.array_equal(ncd.pi0 @ ncd.i0, np.eye(k))
        assert np.array_equal(ncd.piInf @ ncd.iInf, np.eye(k))
        assert ncd.rank_small == k and ncd.rank_big == k + j


def test_residues_exact(complexes):
    for (k, j), (_, ncd) in complexes.items():
        if j == 0:
            continue
        want = np.array([-(j - 1) / 4 + i / 2 for i in range(j)])
        assert np.array_equal(np.sort(np.linalg.eigvals(ncd.X_res).real), want)
        assert np.array_equal(np.sort(expected_residues(j, 0.5)), want)
        assert not np.linalg.matrix_power(ncd.S_res, j).any()


def test_j1_residues_vanish():
    ncd = to_nahm_complex(k1j1())
    assert np.array_equal(ncd.X_res, [[0]]) and np.array_equal(ncd.S_res, [[0]])


def test_k1j0_jumps():
    ncd = to_nahm_complex(k1j0())
    rep = verify_nahm_complex(ncd)
    assert rep.ok
    j0 = ncd.beta_small[0] - ncd.pi0 @ ncd.beta_big[-1] @ ncd.i0
    jinf = ncd.beta_small[-1] - ncd.piInf @ ncd.beta_big[0] @ ncd.iInf
    assert np.allclose(j0, [[0.5]], atol=1e-12) and np.allclose(jinf, [[0.5]], atol=1e-12)
    assert np.allclose(ncd.extra["u0"] @ ncd.extra["w0"], j0, atol=1e-12)


def test_j0_jumps_rank_one(complexes):
    for (k, j), (d, ncd) in complexes.items():
        if j:
            continue
        for a, b in ((ncd.beta_small[0], ncd.pi0 @ ncd.beta_big[-1] @ ncd.i0),
                     (ncd.beta_small[-1], ncd.piInf @ ncd.beta_big[0] @ ncd.iInf)):
            sv = np.linalg.svd(a - b, compute_uv=False)
            assert sv[0] > 1e-6 and (k == 1 or sv[1] <= 1e-9 * sv[0])
        Ainv = np.linalg.inv(d.A)
        assert np.allclose(ncd.beta_small[0] - ncd.pi0 @ ncd.beta_big[-1] @ ncd.i0,
                           d.C1 @ d.D1 @ Ainv, atol=1e-10)


def test_small_side_beta_is_minus_b(complexes):
    for (k, j), (d, ncd) in complexes.items():
        if j:
            assert np.array_equal(ncd.beta_small[0], -d.B)
            assert not np.asarray(ncd.alpha_small).any()


def test_perturbation_probe(complexes):
    _, ncd = complexes[(2, 1)]
    i = len(ncd.theta_big) // 2
    beta = ncd.beta_big.copy()
    beta[i, 0, 0] += 1e-3
    bad = replace(ncd, beta_big=beta)
    h_t = (ncd.theta_big[i + 1] - ncd.theta_big[i]) / ncd.gauge_factor
    assert verify_nahm_complex(bad).checks["constancy_big"].value >= 1e-3 / (2 * h_t)
    assert not verify_nahm_complex(bad).ok


def test_constancy_converges_at_second_order_or_better():
    d = generate_random(2, 0, seed=1)
    r = [verify_nahm_complex(to_nahm_complex(d, PathSpec(n_small=n, n_big=n, pole_points=8)))
         .checks["constancy_big"].value for n in (32, 64)]
    assert r[1] <= r[0] / 4


def test_identity_and_constant_gauges(complexes):
    for (k, j), (_, ncd) in complexes.items():
        same = gauge_act(GaugePath.constant(np.eye(k), np.eye(k + j)), ncd)
        assert np.allclose(same.beta_big, ncd.beta_big) and np.allclose(same.alpha_big, ncd.alpha_big)
        if j:
            continue
        g = np.eye(k) + 0.3 * np.triu(np.ones((k, k)), 1)
        out = gauge_act(GaugePath.constant(g, g), ncd)
        assert np.allclose(out.beta_small, g @ ncd.beta_small @ np.linalg.inv(g))
        assert not out.alpha_small.any()
        assert verify_nahm_complex(out).ok


def _smooth_gpath(ncd, seed):
    """Random gauge obeying the pole block orders, identity at the endpoints."""
    rng = np.random.default_rng(seed)
    k, j = ncd.k, ncd.j
    n = k + j

    def cplx(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    X1, X3 = 0.3 * cplx(k, k), 0.3 * cplx(k, k)
    Y = np.tril(0.3 * cplx(j, j))
    Z = 0.3 * cplx(n, n)
    Z[:k, :k] = 0
    Z[k:, k:] = 0
    C = sla.block_diag(np.eye(k), np.tril(0.2 * rng.standard_normal((j, j)), -1)
                       + np.diag(1 + 0.3 * rng.random(j)))
    m = (j + 1) / 2
    length = ncd.theta_end - ncd.thetaInf

    def path(gen, right=None):
        def f(theta):
            gs, gds = [], []
            for th in np.atleast_1d(theta):
                A, dA = gen(th)
                E, F = sla.expm_frechet(A, dA)
                if right is not None:
                    E, F = E @ right, F @ right
                gs.append(E)
                gds.append(F)
            return np.array(gs), np.array(gds)
        return f

    def small(th):
        return np.sin(th) * X1, np.cos(th) * X1

    def big(th):
        B0 = sla.block_diag(X3, Y)
        if j == 0:
            return np.sin(th) * B0, np.cos(th) * B0
        r, dr = pole_profile(np.array(th), ncd.thetaInf, length)
        return np.sin(th) * B0 + r ** m * Z, np.cos(th) * B0 + m * r ** (m - 1) * dr * Z

    return GaugePath(path(small), path(big, C if j else None))


@pytest.mark.parametrize("k,j", [(1, 0), (2, 0), (2, 1), (3, 1), (2, 2), (2, 3)])
def test_random_gauge_covariance(complexes, k, j):
    d, ncd = complexes[(k, j)]
    base = verify_nahm_complex(ncd)
    out = gauge_act(_smooth_gpath(ncd, seed=k + j), ncd)
    rep = verify_nahm_complex(out)
    assert rep.ok, rep.failures()
    for side in ("small", "big"):
        # compared relative to max|β|, which the gauge changes
        before = base.checks[f"constancy_{side}"].detail["relative"]
        after = rep.checks[f"constancy_{side}"].detail["relative"]
        assert after <= 10 * max(before, 1e-9)
    back = from_nahm_complex(out)
    assert _spectrum_gap(back.B, d.B) < 1e-6
    assert _spectrum_gap(build_MN(back)[0], build_MN(d)[0]) < 1e-6
    nf_a = normal_form(ncd)[1:]
    nf_b = normal_form(out)[1:]
    for x, y in zip(nf_a, nf_b):
        ia, ib = boundary_invariants(x), boundary_invariants(y)
        for key in ia:
            assert np.allclose(ia[key], ib[key], atol=1e-6)


def test_gauge_violating_pole_orders_rejected(complexes):
    _, ncd = complexes[(2, 2)]
    g = np.eye(4, dtype=complex)
    g[0, 3] = 0.5  # off-diagonal block nonzero at the pole
    with pytest.raises(StructuralError):
        gauge_act(GaugePath.constant(np.eye(2), g), ncd)


def test_normal_form_recovers_constant_beta(complexes):
    for key in ((1, 1), (2, 2), (3, 1)):
        d, ncd = complexes[key]
        nfc, nf0, nfinf = normal_form(ncd)
        assert np.allclose(nfc.beta_small, nfc.beta_small[0], atol=0)
        assert np.allclose(nfc.beta_small[0], -d.B, atol=1e-8)
        assert nf0.structure_residual <= 1e-8 and nfinf.structure_residual <= 1e-8


def test_normal_form_rejects_broken_complex(complexes):
    _, ncd = complexes[(2, 1)]
    beta = ncd.beta_big.copy()
    beta[100] += 0.1
    with pytest.raises(VerificationError):
        normal_form(replace(ncd, beta_big=beta))


def test_round_trip_k1j0():
    back = from_nahm_complex(to_nahm_complex(k1j0()))
    assert back.B[0, 0] == 3
    assert abs(back.A[0, 0] - 2) <= 1e-8


def test_round_trip_k1j1():
    back = from_nahm_complex(to_nahm_complex(k1j1()))
    _, N = build_MN(back)
    # Gl(1) rescales the off-diagonal pair oppositely; the diagonal and their product are fixed
    assert abs(N[0, 0] - 1) < 1e-6 and abs(N[1, 1]) < 1e-6
    assert abs(N[0, 1] * N[1, 0] - 1) < 1e-6


def test_round_trip_invariants(complexes):
    for (k, j), (d, ncd) in complexes.items():
        back = from_nahm_complex(ncd)
        assert max(verify_monad_equations(back, tol=1e-6).relative) <= 1e-6
        assert _spectrum_gap(back.B, d.B) < 1e-6
        assert _spectrum_gap(build_MN(back)[0], build_MN(d)[0]) < 1e-6
        assert check_genericity(back).flags == check_genericity(d).flags
        for label in ("Q0inf", "Qinf0"):
            a, b = torsion_support(d, label).points, torsion_support(back, label).points
            assert np.abs(np.sort_complex(a) - np.sort_complex(b)).max() < 1e-6


def test_log_branch():
    ncd = to_nahm_complex(k1j1())  # N has a negative eigenvalue
    assert verify_nahm_complex(ncd).ok
    with pytest.raises(VerificationError, match="gauge"):
        to_nahm_complex(k1j1(), PathSpec(log_branch="principal"))


def test_pathspec_validation():
    with pytest.raises(StructuralError):
        PathSpec(theta0=1.0, thetaInf=0.5)
    with pytest.raises(StructuralError):
        PathSpec(log_branch="polar")
