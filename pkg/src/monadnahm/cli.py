"""Command line: generate, verify, compute cohomology, resolve, convert, flow, round-trip.

Every command prints a JSON report document on stdout.  Exit codes:
0 success, 1 a verification failed, 2 bad input, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import cohomology, io, nahm_bridge, nahm_flow, resolutions
from ._config import TOL_ENV_VAR, WITNESS_TOL, default_tolerance
from .errors import (GenerationError, NonConvergenceError, StructuralError, VerificationError,
                     WindowInstabilityError)
from .monad_core import (MonadData, build_MN, check_genericity, generate_random,
                         verify_monad_equations)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
ROUNDTRIP_TOL = 1e-6


class _Fail(Exception):
    """Carries a finished report out of a command with a non-zero exit code."""

    def __init__(self, report: dict, code: int):
        self.report, self.code = report, code


def _load(path: str, *kinds: str):
    doc = io.load(path)
    if kinds and doc["kind"] not in kinds:
        raise StructuralError(f"{path} holds a {doc['kind']}, expected {' or '.join(kinds)}", "kind")
    return doc["data"]


def match_spectra(a, b) -> float:
    """Largest distance between two multisets of eigenvalues under the best pairing."""
    a, b = np.asarray(a), np.asarray(b)
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def _eig(X):
    return np.linalg.eigvals(X) if X.size else np.zeros(0, dtype=complex)


# ---------------------------------------------------------------- commands

def cmd_gen(args):
    data = generate_random(args.k, args.j, args.seed, zero_eigs=args.zero_eigs)
    io.save(args.out, data, seed=args.seed, tolerances={"monad_equations": default_tolerance()})
    return {"command": "gen", "k": args.k, "j": args.j, "seed": args.seed, "prng": io.PRNG,
            "out": args.out}


def cmd_verify(args):
    data = _load(args.file, "monad")
    eqs = verify_monad_equations(data)
    gen = check_genericity(data)
    failed = [f"monad_eq{i + 1}" for i, r in enumerate(eqs.relative) if r > eqs.tolerance]
    if eqs.A_invertible is False:
        failed.append("A_invertible")
    failed += [c.name for c in gen.conditions if c.holds is not True]
    report = {"command": "verify", "monad_equations": io.to_jsonable(eqs),
              "genericity": io.to_jsonable(gen), "failed": failed, "ok": not failed}
    if failed:
        raise _Fail(report, EXIT_VERIFY)
    return report


def cmd_coh(args):
    data = _load(args.file, "monad")
    twist = cohomology.TwistPair(args.p, args.q)
    chern, chi = cohomology.chern_euler(data.k, data.j, args.tag, twist)
    report = {"command": "coh", "tag": args.tag, "p": args.p, "q": args.q,
              "chern": io.to_jsonable(chern), "chi": chi,
              "h1_closed_form": cohomology.vanishing_h1(data.k, data.j, args.tag, twist),
              "predictions": cohomology.vanishing_predictions(data.k, data.j, args.tag, twist)}
    if args.oracle:
        h = cohomology.cech_cohomology_dims(data, args.tag, twist, window=args.window)
        report["oracle"] = dict(zip(("h0", "h1", "h2"), map(int, h)))
        mismatches = [name for name, v in report["predictions"].items()
                      if report["oracle"].get(name) != v]
        if h[0] - h[1] + h[2] != chi:
            mismatches.append("chi")
        report["mismatches"] = mismatches
        if mismatches:
            raise _Fail(report, EXIT_VERIFY)
    return report


def cmd_resolve(args):
    data = _load(args.file, "monad")
    res, maps = resolutions.resolution_matrices(data)
    comm = resolutions.commutation_residuals(res, maps)
    supports = {label: io.to_jsonable(resolutions.torsion_support(data, label))
                for label in ("Q0inf", "Qinf0")}
    inter = resolutions.verify_intertwining(data) if data.j else 0.0
    scan = resolutions.reducibility_scan(data)
    failed = [name for name, r in comm.items() if r > WITNESS_TOL]
    if inter > WITNESS_TOL:
        failed.append("intertwining")
    if scan:
        failed.append("reducibility")
    report = {"command": "resolve",
              "resolutions": {k: {"a_rank": r.a_rank, "b_rank": r.b_rank} for k, r in res.items()},
              "commutation_residuals": comm, "torsion_supports": supports,
              "intertwining_residual": inter, "reducibility_witnesses": io.to_jsonable(scan),
              "tolerance": WITNESS_TOL, "failed": failed, "ok": not failed}
    if failed:
        raise _Fail(report, EXIT_VERIFY)
    return report


def _pathspec(args) -> nahm_bridge.PathSpec:
    return nahm_bridge.PathSpec(n_small=args.n_small, n_big=args.n_big,
                                pole_points=min(64, args.n_big // 4))


def cmd_nahm(args):
    if args.invert:
        ncd = _load(args.file, "nahm_complex")
        data = nahm_bridge.from_nahm_complex(ncd, tol=args.tol)
        io.save(args.out, data)
        eqs = verify_monad_equations(data, tol=max(default_tolerance(), 1e-8))
        report = {"command": "nahm", "direction": "nahm->monad", "out": args.out,
                  "monad_equations": io.to_jsonable(eqs)}
        if not eqs.ok:
            raise _Fail(report, EXIT_VERIFY)
        return report
    data = _load(args.file, "monad")
    ncd = nahm_bridge.to_nahm_complex(data, _pathspec(args))
    rep = nahm_bridge.verify_nahm_complex(ncd, tol=args.tol)
    io.save(args.out, ncd, tolerances={"nahm_checks": args.tol})
    report = {"command": "nahm", "direction": "monad->nahm", "out": args.out,
              "checks": io.to_jsonable(rep), "failed": rep.failures()}
    if not rep.ok:
        raise _Fail(report, EXIT_VERIFY)
    return report


def cmd_flow(args):
    obj = _load(args.file, "nahm_complex", "discretized_nahm")
    d = nahm_flow.from_nahm_complex(obj) if isinstance(obj, nahm_bridge.NahmComplexData) else obj
    trace_path = args.trace or (args.out + ".trace.txt")
    try:
        out, trace = nahm_flow.flow_to_solution(d, max_steps=args.max_steps, tol=args.tol,
                                                return_trace=True)
    except NonConvergenceError as exc:
        io.write_trace(trace_path, exc.trace)
        raise
    io.write_trace(trace_path, trace.as_rows())
    io.save(args.out, out, tolerances={"real_residual": args.tol})
    return {"command": "flow", "out": args.out, "trace": trace_path, "steps": len(trace.step_size),
            "energy": trace.energy[-1], "real_residual": trace.real_residual[-1],
            "complex_residual": {"initial": trace.complex_residual[0],
                                 "max": max(trace.complex_residual)},
            "tolerance": args.tol}


def roundtrip_report(data: MonadData, pathspec=None) -> dict:
    """monad → Nahm complex → monad, with the deltas of its invariants."""
    ncd = nahm_bridge.to_nahm_complex(data, pathspec)
    back = nahm_bridge.from_nahm_complex(ncd)
    M0, _ = build_MN(data)
    M1, _ = build_MN(back)
    deltas = {"eig_B": match_spectra(_eig(data.B), _eig(back.B)),
              "eig_M": match_spectra(_eig(M0), _eig(M1))}
    for label in ("Q0inf", "Qinf0"):
        deltas[f"support_{label}"] = match_spectra(resolutions.torsion_support(data, label).points,
                                                   resolutions.torsion_support(back, label).points)
    flags = (check_genericity(data).flags, check_genericity(back).flags)
    return {"deltas": deltas, "genericity_before": list(flags[0]),
            "genericity_after": list(flags[1]), "recovered": io.encode_payload(back)}


def cmd_roundtrip(args):
    data = _load(args.file, "monad")
    rep = roundtrip_report(data, _pathspec(args))
    failed = [name for name, v in rep["deltas"].items() if not v <= ROUNDTRIP_TOL]
    if rep["genericity_before"] != rep["genericity_after"]:
        failed.append("genericity")
    report = {"command": "roundtrip", **rep, "tolerance": ROUNDTRIP_TOL, "failed": failed,
              "ok": not failed}
    if failed:
        raise _Fail(report, EXIT_VERIFY)
    return report


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monadnahm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write random generic monad data")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--j", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--zero-eigs", type=int, default=0, choices=(0, 1))
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="monad equations and genericity")
    v.add_argument("file")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("coh", help="closed-form cohomology, optionally checked by the Čech oracle")
    c.add_argument("file")
    c.add_argument("--tag", required=True, choices=cohomology.TAGS)
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--q", type=int, required=True)
    c.add_argument("--oracle", action="store_true")
    c.add_argument("--window", type=int, default=None)
    c.set_defaults(func=cmd_coh)

    r = sub.add_parser("resolve", help="resolutions, torsion supports, reducibility scan")
    r.add_argument("file")
    r.set_defaults(func=cmd_resolve)

    for name, func, hlp in (("nahm", cmd_nahm, "monad to Nahm complex (or back with --invert)"),
                            ("roundtrip", cmd_roundtrip, "monad → Nahm → monad invariant deltas")):
        n = sub.add_parser(name, help=hlp)
        n.add_argument("file")
        n.add_argument("--n-small", type=int, default=512)
        n.add_argument("--n-big", type=int, default=512)
        if name == "nahm":
            n.add_argument("--out", required=True)
            n.add_argument("--invert", action="store_true")
            n.add_argument("--tol", type=float, default=1e-8)
        n.set_defaults(func=func)

    f = sub.add_parser("flow", help="hermitian gauge flow to a solution of the real equation (j = 0)")
    f.add_argument("file")
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--max-steps", type=int, default=100)
    f.add_argument("--out", required=True)
    f.add_argument("--trace", default=None, help="energy trace path (default: OUT.trace.txt)")
    f.set_defaults(func=cmd_flow)
    return p


def _error_report(exc: Exception) -> dict:
    rep = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "check"):
        if getattr(exc, attr, None) is not None:
            rep[attr] = getattr(exc, attr)
    if getattr(exc, "witness", None) is not None:
        rep["witness"] = io.to_jsonable(exc.witness)
    if isinstance(exc, NonConvergenceError):
        rep["trace"] = io.to_jsonable(exc.trace)
    return rep


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        report, code = {"status": "ok", **args.func(args)}, EXIT_OK
    except _Fail as fail:
        report, code = {"status": "failed", **fail.report}, fail.code
    except VerificationError as exc:
        report, code = _error_report(exc), EXIT_VERIFY
    except (StructuralError, ValueError, OSError) as exc:
        report, code = _error_report(exc), EXIT_INPUT
    except (NonConvergenceError, GenerationError, WindowInstabilityError) as exc:
        report, code = _error_report(exc), EXIT_NUMERIC
    report["tolerance_env"] = {TOL_ENV_VAR: default_tolerance_or_none()}
    stdout.write(io.dumps(report) + "\n")
    return code


def default_tolerance_or_none():
    try:
        return default_tolerance()
    except ValueError:
        return None


if __name__ == "__main__":
    sys.exit(main())
