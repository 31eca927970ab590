import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from monadnahm import nahm_flow as F
from monadnahm.errors import NonConvergenceError, StructuralError
from monadnahm.monad_core import generate_random
from monadnahm.nahm_bridge import PathSpec, to_nahm_complex


def _bridge(k, seed, n=256):
    d = generate_random(k, 0, seed=seed)
    return F.from_nahm_complex(to_nahm_complex(d, PathSpec(n_small=n, n_big=n, pole_points=max(8, n // 8))))


def _field(fa, fb, n, period=2 * np.pi, split=np.pi):
    """DiscretizedNahm sampling α = fa(t), β = fb(t) on both intervals."""
    ts = np.linspace(0, split, n)
    tb = np.linspace(split, period, n)
    k = np.atleast_2d(fa(0.0)).shape[0]
    u, w = np.zeros((k, 1)), np.zeros((1, k))
    return F.DiscretizedNahm(ts, [fa(t) for t in ts], [fb(t) for t in ts],
                             tb, [fa(t) for t in tb], [fb(t) for t in tb], u, w, u, w, period)


def _const(M):
    M = np.asarray(M, dtype=complex)
    return lambda t: M


def test_constant_fields_have_zero_complex_residual():
    d = _field(_const(np.zeros((2, 2))), _const([[1, 2], [3, 4]]), 32)
    assert F.complex_residual(d) == 0.0


def test_real_residual_examples():
    assert F.real_residual(_field(_const([[0.3 + 2j]]), _const([[1 - 1j]]), 16)) == 0.0
    normal = np.diag([1 + 1j, -2.0])
    assert F.real_residual(_field(_const(np.zeros((2, 2))), _const(normal), 16)) == 0.0
    nil = _field(_const(np.zeros((2, 2))), _const([[0, 1], [0, 0]]), 16)
    assert F.real_residual(nil) == 1.0
    mu = F.moment_map(nil.grid_small, nil.alpha_small, nil.beta_small)
    assert np.array_equal(mu[3], np.diag([1, -1]))


def test_energy_examples():
    zero = _field(_const(np.zeros((2, 2))), _const(np.zeros((2, 2))), 16)
    assert F.energy(zero) == 0.0
    beta = np.array([[0.2, 1], [0.3j, -0.5]])
    e1 = F.energy(_field(_const(np.zeros((2, 2))), _const(beta), 16))
    e2 = F.energy(_field(_const(np.zeros((2, 2))), _const((1.5 - 0.5j) * beta), 16))
    assert np.isclose(e2, abs(1.5 - 0.5j) ** 4 * e1, rtol=1e-12)
    assert e1 > 0 and F.real_residual(zero) == 0.0


def test_complex_perturbation_probe():
    n = 64
    d = _field(_const(np.zeros((2, 2))), _const([[1, 0], [0, 2]]), n)
    h = d.grid_small[1] - d.grid_small[0]
    beta = d.beta_small.copy()
    beta[n // 2, 0, 1] += 1e-3
    bad = F.DiscretizedNahm(d.grid_small, d.alpha_small, beta, d.grid_big, d.alpha_big, d.beta_big,
                            d.u0, d.w0, d.uinf, d.winf, d.period)
    assert F.complex_residual(bad) >= 1e-3 / (2 * h) * (1 - 1e-9)


def _manufactured_complex(n):
    Z = np.array([[0.3, 1.0], [-0.4j, 0.2]])
    b0 = np.array([[1.0, 0.5], [0.0, -1.0j]])

    def g(t):
        return sla.expm(t * Z)

    return _field(lambda t: -Z, lambda t: g(t) @ b0 @ np.linalg.inv(g(t)), n)


def _manufactured_real(n):
    X0 = np.array([[1.0, 0.5 - 0.2j], [0.5 + 0.2j, -0.3]])
    Y = np.array([[0.4j, 0.7], [-0.7, -0.1j]])

    def alpha(t):
        return 0.5 * sla.expm(-t * Y) @ X0 @ sla.expm(t * Y) + Y

    return _field(alpha, _const(np.zeros((2, 2))), n)


@pytest.mark.parametrize("make,residual", [(_manufactured_complex, F.complex_residual),
                                           (_manufactured_real, F.real_residual)])
def test_grid_convergence_second_order(make, residual):
    r = [residual(make(n)) for n in (41, 81, 161)]
    for coarse, fine in zip(r, r[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_validation():
    d = _field(_const([[0]]), _const([[1]]), 8)
    with pytest.raises(StructuralError):
        F.DiscretizedNahm(d.grid_small[::-1], d.alpha_small, d.beta_small, d.grid_big,
                          d.alpha_big, d.beta_big, d.u0, d.w0, d.uinf, d.winf, d.period)
    with pytest.raises(StructuralError):
        F.DiscretizedNahm(d.grid_small, d.alpha_small, d.beta_small, d.grid_big + 0.1,
                          d.alpha_big, d.beta_big, d.u0, d.w0, d.uinf, d.winf, d.period)
    with pytest.raises(StructuralError):
        F.from_nahm_complex(to_nahm_complex(generate_random(1, 1, seed=0)))


def test_time_rescaling():
    d = _bridge(2, 0, n=64)
    assert d.time_scale == 0.5
    assert np.isclose(d.period, 4 * np.pi)


def test_abelian_converges_in_two_steps():
    d = _bridge(1, 3)
    assert F.real_residual(d) > 1e-2
    out, tr = F.flow_to_solution(d, tol=1e-6, return_trace=True)
    assert len(tr.step_size) <= 2
    assert F.real_residual(out) <= 1e-9
    assert F.complex_residual(out) <= 1e-12


@pytest.mark.parametrize("k,seed", [(2, 0), (2, 1), (3, 0)])
def test_flow_converges(k, seed):
    d = _bridge(k, seed)
    out, tr = F.flow_to_solution(d, tol=1e-6, return_trace=True)
    assert F.real_residual(out) <= 1e-6
    e = np.array(tr.energy)
    assert np.all(np.diff(e) < 0)
    assert max(tr.complex_residual) <= 10 * tr.complex_residual[0]
    # rank-one jumps move covariantly with the gauge at the shared nodes
    assert np.allclose(out.beta_small[0] - out.beta_big[-1], out.u0 @ out.w0, atol=1e-10)
    assert np.allclose(out.beta_small[-1] - out.beta_big[0], out.uinf @ out.winf, atol=1e-10)


def test_flow_fixed_point():
    out = F.flow_to_solution(_bridge(2, 1), tol=1e-8)
    again, tr = F.flow_to_solution(out, tol=1e-8, return_trace=True)
    assert tr.step_size == []
    assert np.array_equal(again.beta_big, out.beta_big)


def test_flow_nonconvergence_carries_trace():
    with pytest.raises(NonConvergenceError) as exc:
        F.flow_to_solution(_bridge(3, 0), max_steps=1, tol=1e-12)
    trace = exc.value.trace
    assert len(trace) == 2 and trace[1][1] < trace[0][1]


def test_unitary_invariance():
    out = F.flow_to_solution(_bridge(2, 0), tol=1e-8)
    U, _ = np.linalg.qr(np.array([[1, 2j], [0.5, -1]]))
    Ui = U.conj().T
    v = F.DiscretizedNahm(out.grid_small, U @ out.alpha_small @ Ui, U @ out.beta_small @ Ui,
                          out.grid_big, U @ out.alpha_big @ Ui, U @ out.beta_big @ Ui,
                          U @ out.u0, out.w0 @ Ui, U @ out.uinf, out.winf @ Ui, out.period,
                          out.time_scale)
    for fn in (F.real_residual, F.complex_residual):
        assert abs(fn(v) - fn(out)) <= 1e-12 * max(1.0, fn(out)) + 1e-13
    assert np.isclose(F.energy(v), F.energy(out), rtol=1e-10, atol=1e-20)


@settings(max_examples=10, deadline=None)
@given(k=st.integers(1, 3), seed=st.integers(0, 10**4))
def test_gradient_matches_finite_differences(k, seed):
    rng = np.random.default_rng(seed)
    d = _bridge(k, seed % 7, n=64)
    # move to a random point of the orbit first
    d = F.apply_hermitian_gauge(d, 0.1 * rng.standard_normal(F._n_unknowns(d) * k * k))
    grad = F.energy_gradient(d)
    x = rng.standard_normal(grad.shape)
    eps = 1e-5
    fd = (F.energy(F.apply_hermitian_gauge(d, eps * x))
          - F.energy(F.apply_hermitian_gauge(d, -eps * x))) / (2 * eps)
    assert abs(fd - grad @ x) <= 1e-4 * abs(fd)


def test_hermitian_coordinates_round_trip(rng):
    d = _bridge(2, 0, n=32)
    x = rng.standard_normal(F._n_unknowns(d) * 4)
    xs, xb = F.hermitian_fields(d, x)
    assert np.allclose(xs, np.conj(np.swapaxes(xs, 1, 2)))
    assert np.allclose(F.gauge_coordinates(d, xs, xb), x)
    assert np.array_equal(xs[0], xb[-1]) and np.array_equal(xs[-1], xb[0])
