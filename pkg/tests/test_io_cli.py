import json
from io import StringIO

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from monadnahm import io
from monadnahm.cli import main
from monadnahm.errors import StructuralError
from monadnahm.monad_core import MonadData, generate_random
from monadnahm.nahm_bridge import PathSpec, to_nahm_complex
from monadnahm.nahm_flow import from_nahm_complex

from conftest import k1j0, k1j1


def same_bits(a, b) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()


def same_object(x, y) -> bool:
    if type(x) is not type(y):
        return False
    if isinstance(x, dict):
        return x.keys() == y.keys() and all(same_object(x[k], y[k]) for k in x)
    if isinstance(x, np.ndarray):
        return same_bits(x, y)
    if hasattr(x, "__dataclass_fields__"):
        return all(same_object(getattr(x, f), getattr(y, f)) for f in x.__dataclass_fields__)
    if isinstance(x, float):
        return np.float64(x).tobytes() == np.float64(y).tobytes()
    return x == y


finite = st.floats(allow_nan=False, allow_infinity=False)
shapes = hnp.array_shapes(min_dims=0, max_dims=3, max_side=4)
real_arrays = hnp.arrays(np.float64, shapes, elements=finite)
complex_arrays = hnp.arrays(np.complex128, shapes,
                            elements=st.complex_numbers(allow_nan=False, allow_infinity=False))
int_arrays = hnp.arrays(np.int64, shapes, elements=st.integers(-2**62, 2**62))


@settings(max_examples=200, deadline=None)
@given(a=st.one_of(real_arrays, complex_arrays, int_arrays))
def test_array_round_trip_bit_exact(a):
    back = io.decode_array(json.loads(json.dumps(io.encode_array(a))))
    assert same_bits(a, back)


def test_signed_zero_survives():
    a = np.array([complex(-0.0, 0.0), complex(0.0, -0.0)])
    back = io.decode_array(json.loads(json.dumps(io.encode_array(a))))
    assert same_bits(a, back)
    assert np.signbit(back.real[0]) and np.signbit(back.imag[1])


def _random_monad(rng, k, j):
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    return MonadData(k, j, c(k, k), c(k, k), c(k, 2), c(2, k), c(j, k), c(1, k), c(j, 2))


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 4), j=st.integers(0, 3), seed=st.integers(0, 2**32 - 1))
def test_monad_round_trip(k, j, seed):
    d = _random_monad(np.random.default_rng(seed), k, j)
    assert same_object(io.loads(io.dumps(d, seed=seed)), d)


def test_nahm_and_discretized_round_trip():
    ncd = to_nahm_complex(generate_random(2, 0, seed=1), PathSpec(n_small=32, n_big=32, pole_points=8))
    assert same_object(io.loads(io.dumps(ncd)), ncd)
    d = from_nahm_complex(ncd)
    assert same_object(io.loads(io.dumps(d)), d)


reports = st.recursive(
    st.one_of(st.booleans(), st.integers(-10**9, 10**9), finite, st.text(max_size=8), st.none()),
    lambda inner: st.one_of(st.lists(inner, max_size=4),
                            st.dictionaries(st.text(max_size=6), inner, max_size=4)),
    max_leaves=20)


@settings(max_examples=100, deadline=None)
@given(payload=st.dictionaries(st.text(max_size=6), reports, max_size=5))
def test_report_round_trip(payload):
    assert same_object(io.loads(io.dumps(payload)), payload)


def test_header_records_prng_and_tolerances():
    doc = io.loads_document(io.dumps(k1j0(), seed=7, tolerances={"x": 1e-9}))
    assert doc["header"] == {"tolerances": {"x": 1e-9}, "prng": io.PRNG, "seed": 7}
    assert doc["kind"] == "monad" and doc["format_version"] == io.FORMAT_VERSION


@pytest.mark.parametrize("text", [
    "not json", "[]", '{"format_version": 2, "kind": "monad", "payload": {}}',
    '{"format_version": 1, "kind": "sheaf", "payload": {}}',
    '{"format_version": 1, "kind": "monad", "payload": {"k": 1}}',
    '{"format_version": 1, "kind": "monad"}',
])
def test_malformed_documents(text):
    with pytest.raises(StructuralError):
        io.loads(text)


def test_non_finite_report_values_are_strings():
    doc = io.loads_document(io.dumps({"x": float("inf")}))
    assert doc["payload"]["x"] == "inf"


def test_trace_file(tmp_path):
    io.write_trace(tmp_path / "t.txt", [(0, 1.5), (1, 0.25)])
    rows = np.loadtxt(tmp_path / "t.txt")
    assert rows.tolist() == [[0, 1.5], [1, 0.25]]


# ---------------------------------------------------------------- CLI

def run(*argv):
    out = StringIO()
    code = main([str(a) for a in argv], stdout=out)
    return code, io.loads(out.getvalue())


def test_gen_then_verify(tmp_path):
    f = tmp_path / "m.json"
    code, rep = run("gen", "--k", 1, "--j", 0, "--seed", 7, "--out", f)
    assert code == 0 and rep["status"] == "ok"
    assert io.load(f)["header"]["seed"] == 7
    code, rep = run("verify", f)
    assert code == 0 and rep["failed"] == []


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        run("gen", "--k", 3, "--j", 2, "--seed", 11, "--out", tmp_path / name)
    assert (tmp_path / "a").read_text() == (tmp_path / "b").read_text()


def test_verify_detects_perturbation(tmp_path):
    d = generate_random(2, 1, seed=3)
    C = d.C.copy()
    C[:, 0] += 1e-3
    f = tmp_path / "bad.json"
    io.save(f, MonadData(d.k, d.j, d.A, d.B, C, d.D, d.Aprime, d.Bprime, d.Cprime))
    code, rep = run("verify", f)
    assert code == 1 and "monad_eq1" in rep["failed"]
    # the first column of C multiplies the first row of D
    assert rep["monad_equations"]["eq1"] == pytest.approx(1e-3 * np.abs(d.D[0]).max(), rel=1e-6)


def test_structural_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("verify", bad)[0] == 2
    assert run("verify", tmp_path / "missing.json")[0] == 2
    assert main(["frobnicate"], stdout=StringIO()) == 2
    f = tmp_path / "m.json"
    io.save(f, k1j0())
    code, rep = run("flow", f, "--out", tmp_path / "o.json")
    assert code == 2 and rep["error"] == "StructuralError"


def test_bad_tolerance_environment(tmp_path, monkeypatch):
    f = tmp_path / "m.json"
    io.save(f, k1j0())
    monkeypatch.setenv("MONADNAHM_TOL", "banana")
    code, rep = run("verify", f)
    assert code == 2 and rep["tolerance_env"]["MONADNAHM_TOL"] is None


def test_coh_and_resolve(tmp_path):
    f = tmp_path / "m.json"
    io.save(f, generate_random(2, 1, seed=0))
    code, rep = run("coh", f, "--tag", "E", "--p", -1, "--q", -1, "--oracle")
    assert code == 0, rep
    code, rep = run("resolve", f)
    assert code == 0 and rep["reducibility_witnesses"] == []


def test_nahm_invert_flow_chain(tmp_path):
    f, g, h, o = (tmp_path / n for n in ("m.json", "n.json", "back.json", "flow.json"))
    io.save(f, generate_random(2, 0, seed=4))
    assert run("nahm", f, "--out", g, "--n-small", 64, "--n-big", 64, "--tol", 1e-6)[0] == 0
    code, rep = run("nahm", g, "--out", h, "--invert", "--tol", 1e-6)
    assert code == 0 and io.load(h)["kind"] == "monad"
    code, rep = run("flow", g, "--out", o, "--tol", 1e-6)
    assert code == 0 and rep["real_residual"] <= 1e-6
    assert io.load(o)["kind"] == "discretized_nahm"
    trace = np.loadtxt(str(o) + ".trace.txt")
    assert np.all(np.diff(trace[:, 1]) < 0)


def test_flow_nonconvergence_exit_code(tmp_path):
    f, g = tmp_path / "m.json", tmp_path / "n.json"
    io.save(f, generate_random(3, 0, seed=0))
    run("nahm", f, "--out", g, "--n-small", 64, "--n-big", 64, "--tol", 1e-6)
    code, rep = run("flow", g, "--out", tmp_path / "o.json", "--max-steps", 1, "--tol", 1e-14,
                    "--trace", tmp_path / "t.txt")
    assert code == 3 and rep["error"] == "NonConvergenceError"
    assert len(np.loadtxt(tmp_path / "t.txt")) == 2


def test_roundtrip_k1j1(tmp_path):
    f = tmp_path / "m.json"
    io.save(f, k1j1())
    code, rep = run("roundtrip", f)
    assert code == 0
    assert rep["deltas"]["eig_B"] <= 1e-6 and rep["deltas"]["eig_M"] <= 1e-6


def test_exit_code_depends_only_on_input(tmp_path):
    f = tmp_path / "m.json"
    io.save(f, generate_random(2, 2, seed=5))
    first, second = run("verify", f), run("verify", f)
    assert first == second
