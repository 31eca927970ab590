"""Versioned JSON files for monads, Nahm complexes, discretized data and reports.

Every file is an object ``{"format_version", "kind", "header", "payload"}``.
Arrays are ``{"dtype", "shape", "data"}`` with row-major nested ``data``;
complex entries are ``[re, im]``.  Python's float repr is shortest-exact, so
parsing a serialized value gives back the same bits.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .errors import StructuralError
from .monad_core import MonadData
from .nahm_bridge import NahmComplexData, PathSpec
from .nahm_flow import DiscretizedNahm

FORMAT_VERSION = 1
PRNG = "numpy.random.PCG64"
KINDS = ("monad", "nahm_complex", "discretized_nahm", "report")


# ---------------------------------------------------------------- values

def encode_array(a) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        data = np.stack([a.real, a.imag], axis=-1).tolist()
        dtype = "complex"
    elif a.dtype == bool:
        data, dtype = a.tolist(), "bool"
    elif np.issubdtype(a.dtype, np.integer):
        data, dtype = a.tolist(), "int"
    else:
        data, dtype = a.astype(float).tolist(), "float"
    return {"dtype": dtype, "shape": list(a.shape), "data": data}


def decode_array(obj) -> np.ndarray:
    try:
        dtype, shape, data = obj["dtype"], tuple(obj["shape"]), obj["data"]
    except (TypeError, KeyError) as exc:
        raise StructuralError(f"malformed array record: {exc}", "array") from exc
    try:
        if dtype == "complex":
            raw = np.array(data, dtype=float).reshape(shape + (2,))
            # assign parts separately: re + 1j*im would lose signed zeros
            out = np.empty(shape, dtype=complex)
            out.real, out.imag = raw[..., 0], raw[..., 1]
            return out
        kind = {"float": float, "int": np.int64, "bool": bool}[dtype]
        return np.array(data, dtype=kind).reshape(shape)
    except (KeyError, ValueError) as exc:
        raise StructuralError(f"bad array record ({dtype}, {shape}): {exc}", "array") from exc


def _float(x):
    """Non-finite report values become strings; JSON has no inf or nan."""
    x = float(x)
    return x if np.isfinite(x) else repr(x)


def to_jsonable(value):
    """Plain JSON structure for reports: dataclasses, arrays, numpy scalars, nested containers."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        out = {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
        for prop in ("ok", "flags", "relative"):
            if hasattr(type(value), prop) and isinstance(getattr(type(value), prop), property):
                out[prop] = to_jsonable(getattr(value, prop))
        return out
    if isinstance(value, np.ndarray):
        return encode_array(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_float(value.real), _float(value.imag)]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _float(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


# ---------------------------------------------------------------- kinds

_MONAD_ARRAYS = ("A", "B", "C", "D", "Aprime", "Bprime", "Cprime")
_NAHM_ARRAYS = ("theta_small", "alpha_small", "beta_small", "theta_big", "alpha_big",
                "beta_big", "i0", "pi0", "iInf", "piInf", "X_res", "S_res")
_DISC_ARRAYS = ("grid_small", "alpha_small", "beta_small", "grid_big", "alpha_big", "beta_big",
                "u0", "w0", "uinf", "winf")


def _kind_of(obj) -> str:
    if isinstance(obj, MonadData):
        return "monad"
    if isinstance(obj, NahmComplexData):
        return "nahm_complex"
    if isinstance(obj, DiscretizedNahm):
        return "discretized_nahm"
    if isinstance(obj, dict):
        return "report"
    raise StructuralError(f"cannot serialize {type(obj).__name__}", "kind")


def encode_payload(obj) -> dict:
    kind = _kind_of(obj)
    if kind == "monad":
        out = {"k": obj.k, "j": obj.j}
        out.update({n: encode_array(getattr(obj, n)) for n in _MONAD_ARRAYS})
        return out
    if kind == "nahm_complex":
        out = {n: encode_array(getattr(obj, n)) for n in _NAHM_ARRAYS}
        out.update(theta0=obj.theta0, thetaInf=obj.thetaInf, k=obj.k, j=obj.j,
                   gauge_factor=obj.gauge_factor, interpolation=obj.interpolation,
                   segments=[list(s) for s in obj.segments],
                   extra={key: encode_array(v) for key, v in obj.extra.items()},
                   pathspec=dataclasses.asdict(obj.pathspec))
        return out
    if kind == "discretized_nahm":
        out = {n: encode_array(getattr(obj, n)) for n in _DISC_ARRAYS}
        out.update(period=obj.period, time_scale=obj.time_scale)
        return out
    return to_jsonable(obj)


def decode_payload(kind: str, p: dict):
    try:
        if kind == "monad":
            return MonadData(p["k"], p["j"], **{n: decode_array(p[n]) for n in _MONAD_ARRAYS})
        if kind == "nahm_complex":
            arrays = {n: decode_array(p[n]) for n in _NAHM_ARRAYS}
            return NahmComplexData(
                theta0=p["theta0"], thetaInf=p["thetaInf"], k=p["k"], j=p["j"],
                gauge_factor=p["gauge_factor"], interpolation=p["interpolation"],
                segments=tuple(tuple(s) for s in p["segments"]),
                extra={key: decode_array(v) for key, v in p["extra"].items()},
                pathspec=PathSpec(**p["pathspec"]), **arrays)
        if kind == "discretized_nahm":
            arrays = {n: decode_array(p[n]) for n in _DISC_ARRAYS}
            return DiscretizedNahm(period=p["period"], time_scale=p["time_scale"], **arrays)
        if kind == "report":
            if not isinstance(p, dict):
                raise StructuralError("report payload must be an object", "payload")
            return p
    except KeyError as exc:
        raise StructuralError(f"{kind} payload is missing {exc}", str(exc.args[0])) from exc
    except TypeError as exc:
        raise StructuralError(f"{kind} payload is malformed: {exc}", "payload") from exc
    raise StructuralError(f"unknown kind {kind!r}; expected one of {KINDS}", "kind")


# ---------------------------------------------------------------- documents

def dumps(obj, *, tolerances: dict | None = None, seed: int | None = None,
          header: dict | None = None) -> str:
    head = dict(header or {})
    head["tolerances"] = dict(tolerances or {})
    if seed is not None:
        head["prng"] = PRNG
        head["seed"] = int(seed)
    doc = {"format_version": FORMAT_VERSION, "kind": _kind_of(obj), "header": head,
           "payload": encode_payload(obj)}
    return json.dumps(doc, indent=1, allow_nan=False)


def loads_document(text: str) -> dict:
    """Parse and validate the envelope; the payload is decoded into the data object."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"not valid JSON: {exc}", "file") from exc
    if not isinstance(doc, dict):
        raise StructuralError("top level must be an object", "file")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise StructuralError(f"unsupported format_version {version!r}", "format_version")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise StructuralError(f"unknown kind {kind!r}; expected one of {KINDS}", "kind")
    if "payload" not in doc:
        raise StructuralError("missing payload", "payload")
    doc["header"] = doc.get("header") or {}
    doc["data"] = decode_payload(kind, doc["payload"])
    return doc


def loads(text: str):
    return loads_document(text)["data"]


def save(path, obj, **kwargs) -> None:
    Path(path).write_text(dumps(obj, **kwargs) + "\n")


def load(path):
    return loads_document(Path(path).read_text())


def write_trace(path, rows) -> None:
    """Two-column text (step, energy) for plotting."""
    with open(path, "w") as fh:
        fh.write("# step energy\n")
        for step, value in rows:
            fh.write(f"{int(step)} {float(value)!r}\n")
