import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import k1j0, k1j1, random_g
from monadnahm import resolutions as R
from monadnahm.errors import StructuralError
from monadnahm.monad_core import (
    MonadData, build_MN, build_N_prime, check_genericity, generate_random, gl_k_act,
    plant_degenerate,
)


def _pencil(res, x):
    return res.P0 + x * res.P1


def test_k1j0_pencils():
    res, _ = R.resolution_matrices(k1j0())
    x = 1.7
    assert np.allclose(_pencil(res["Qinf0"], x), [[x - 3]])
    assert np.allclose(_pencil(res["Pinf"], x), [[x - 3], [-1]])


def test_k1j1_q0inf_pencil():
    res, _ = R.resolution_matrices(k1j1())
    x = -0.4 + 2j
    assert np.allclose(_pencil(res["Q0inf"], x), [[x, 1], [0, x]])


def test_rank_bookkeeping():
    res, _ = R.resolution_matrices(generate_random(3, 2, seed=1))
    for label, diff in (("P0", 1), ("Pinf", 1), ("Q0inf", 0), ("Qinf0", 0)):
        assert res[label].b_rank - res[label].a_rank == diff


@pytest.mark.parametrize("k,j", [(k, j) for k in range(1, 5) for j in range(0, 4)])
def test_commutation_exact(k, j):
    d = generate_random(k, j, seed=k * 7 + j)
    res, maps = R.resolution_matrices(d)
    scale = d.scale() ** 2
    for name, r in R.commutation_residuals(res, maps).items():
        assert r <= 1e-12 * scale, name


def test_commutation_detects_broken_equations():
    d = generate_random(2, 1, seed=4)
    bad = d.replace(B=d.B + 1e-3 * np.eye(2)[:, ::-1])
    res, maps = R.resolution_matrices(bad)
    assert max(R.commutation_residuals(res, maps).values()) > 1e-4


def test_torsion_supports_examples():
    assert np.allclose(R.torsion_support(k1j0(), "Qinf0").points, [3])
    assert np.allclose(R.torsion_support(k1j1(), "Q0inf").points, [0, 0])
    d = generate_random(3, 2, seed=2)
    assert len(R.torsion_support(d, "Qinf0").points) == 3
    assert len(R.torsion_support(d, "Q0inf").points) == 5
    with pytest.raises(StructuralError):
        R.torsion_support(d, "P0")


def test_pencils_injective_everywhere():
    d = generate_random(3, 2, seed=6)
    res, _ = R.resolution_matrices(d)
    for label in ("P0", "Pinf"):
        r = res[label]
        # candidate rank drops come from the square part; check there and at random points
        cands = list(np.linalg.eigvals(-r.P0[: r.a_rank])) + list(np.random.default_rng(0).standard_normal(5))
        for x in cands:
            assert np.linalg.svd(_pencil(r, x), compute_uv=False)[-1] > 1e-8


def test_twist_examples():
    res, _ = R.resolution_matrices(k1j0())
    tw = R.twist_resolution(res["Pinf"], 1)
    x = 0.9
    assert np.allclose(_pencil(tw, x), [[x - 3, 0], [-1, x], [0, -1]])
    assert R.twist_resolution(res["Pinf"], 0) is res["Pinf"]
    with pytest.raises(StructuralError):
        R.twist_resolution(res["Qinf0"], 1)


def test_twist_grows_sections():
    res, _ = R.resolution_matrices(generate_random(2, 1, seed=3))
    for ell in range(4):
        tw = R.twist_resolution(res["P0"], ell)
        assert (tw.a_rank, tw.b_rank) == (res["P0"].a_rank + ell, res["P0"].b_rank + ell)


@pytest.mark.parametrize("k,j", [(1, 1), (2, 1), (2, 2), (3, 3)])
def test_twisted_diagram_commutes_iff_equations(k, j):
    d = generate_random(k, j, seed=11)
    assert R.twisted_diagram_residual(d) <= 1e-11 * d.scale() ** 2
    bad = d.replace(Aprime=d.Aprime + 1e-3)
    assert R.twisted_diagram_residual(bad) > 1e-5


def test_gencon4_matches_sections_isomorphism():
    d = generate_random(2, 2, seed=5)
    _, N = build_MN(d)
    assert N.shape == (4, 4) and abs(np.linalg.det(N)) > 1e-8
    assert build_N_prime(d).shape == (4, 3)


def test_intertwining_k1j1_exact():
    assert R.verify_intertwining(k1j1()) == 0.0


def test_intertwining_invariant_under_gl(rng):
    d = generate_random(3, 2, seed=1)
    e = gl_k_act(random_g(rng, 3), d)
    assert R.verify_intertwining(d) < 1e-10
    assert R.verify_intertwining(e) < 1e-8


def test_intertwining_sensitivity():
    d = generate_random(2, 1, seed=2)
    bad = d.replace(Aprime=d.Aprime + 1e-3 * np.array([[1, -1]]))
    r = R.verify_intertwining(bad)
    assert 1e-5 < r < 1e-1


def test_scan_empty_for_generic():
    for seed in range(10):
        assert R.reducibility_scan(generate_random(2, 1, seed=seed)) == []


def test_scan_planted_zero_cd():
    d = MonadData(1, 0, [[2]], [[3]], [[0, 0]], [[0], [0]])
    cases = {(w.case, round(w.x.real, 12)) for w in R.reducibility_scan(d)}
    assert ("Case1", 3.0) in cases


@pytest.mark.parametrize("case", ["gencon1", "gencon2", "both"])
@pytest.mark.parametrize("k,j", [(1, 0), (2, 0), (2, 1), (3, 1)])
def test_scan_matches_genericity_on_planted(case, k, j):
    d, x, y = plant_degenerate(k, j, seed=k + j, case=case)
    rep = check_genericity(d)
    scan = R.reducibility_scan(d)
    found = {w.case for w in scan}
    assert ("Case1" in found) == (rep.gencon1.holds is False)
    assert ("Case2" in found) == (rep.gencon2.holds is False)
    assert any(abs(w.x - x) < 1e-6 for w in scan)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 3), j=st.integers(0, 2), seed=st.integers(0, 10**6))
def test_scan_matches_genericity_on_generic(k, j, seed):
    d = generate_random(k, j, seed=seed)
    assert check_genericity(d).ok and R.reducibility_scan(d) == []
    rng = np.random.default_rng(seed)
    e = gl_k_act(random_g(rng, k), d)
    for label in ("Qinf0", "Q0inf"):
        a, b = R.torsion_support(d, label).points, R.torsion_support(e, label).points
        assert np.abs(a[:, None] - b[None, :]).min(axis=1).max() < 1e-7
