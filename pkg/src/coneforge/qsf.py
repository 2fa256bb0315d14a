"""Reader/writer for the QSF problem file format (JSON, version 1).

Layout:

    {"version": 1, "n": int, "p": int, "l": int, "q": [int, ...],
     "P": {"colptr": [...], "rowidx": [...], "vals": [...]},
     "c": [...], "A": <matrix or null>, "b": [...],
     "G": <matrix or null>, "h": [...]}

"A" is null exactly when p == 0 and "G" is null exactly when m == 0;
the in-memory problem always carries explicit zero-row matrices.  Writing
uses repr-style shortest decimals, so write -> parse reproduces every
float bit for bit.
"""

from __future__ import annotations

import json
import math

from .problem import (ConeSpec, ParseError, ProblemData, SchemaError,
                      SparseMat, SparseSym, validate)

_TOP_KEYS = ("version", "n", "p", "l", "q", "P", "c", "A", "b", "G", "h")
_MAT_KEYS = ("colptr", "rowidx", "vals")


def _require(obj: dict, key: str, parent: str = ""):
    if key not in obj:
        raise SchemaError(f"missing key '{parent}{key}'", key=parent + key)
    return obj[key]


def _int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"'{key}' must be an integer", key=key)
    return value


def _int_list(value, key: str) -> list[int]:
    if not isinstance(value, list):
        raise SchemaError(f"'{key}' must be an array", key=key)
    return [_int(v, key) for v in value]


def _float_list(value, key: str) -> list[float]:
    if not isinstance(value, list):
        raise SchemaError(f"'{key}' must be an array", key=key)
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"'{key}' must contain only numbers", key=key)
        v = float(v)
        if not math.isfinite(v):
            raise SchemaError(f"'{key}' contains a non-finite value", key=key)
        out.append(v)
    return out


def _matrix(obj, key: str, cls):
    if not isinstance(obj, dict):
        raise SchemaError(f"'{key}' must be an object", key=key)
    for k in obj:
        if k not in _MAT_KEYS:
            raise SchemaError(f"unknown key '{key}.{k}'", key=f"{key}.{k}")
    colptr = _int_list(_require(obj, "colptr", key + "."), key + ".colptr")
    rowidx = _int_list(_require(obj, "rowidx", key + "."), key + ".rowidx")
    vals = _float_list(_require(obj, "vals", key + "."), key + ".vals")
    ncols = len(colptr) - 1
    return colptr, rowidx, vals, ncols


def parse_problem(text: str) -> ProblemData:
    """Parse QSF text into a validated problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at byte {e.pos}: {e.msg}", offset=e.pos) from e
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    for k in doc:
        if k not in _TOP_KEYS:
            raise SchemaError(f"unknown key '{k}'", key=k)
    version = _int(_require(doc, "version"), "version")
    if version != 1:
        raise SchemaError(f"unsupported version {version}", key="version")
    n = _int(_require(doc, "n"), "n")
    p = _int(_require(doc, "p"), "p")
    l = _int(_require(doc, "l"), "l")
    q = _int_list(_require(doc, "q"), "q")
    cones = ConeSpec(l=l, soc_dims=q)
    m = cones.m

    cp, ri, vv, ncols = _matrix(_require(doc, "P"), "P", SparseSym)
    P = SparseSym(ncols, ncols, cp, ri, vv)

    a_obj = _require(doc, "A")
    if p == 0:
        if a_obj is not None:
            raise SchemaError("'A' must be null when p == 0", key="A")
        A = SparseMat.zeros(0, n)
    else:
        if a_obj is None:
            raise SchemaError("'A' must not be null when p > 0", key="A")
        cp, ri, vv, ncols = _matrix(a_obj, "A", SparseMat)
        A = SparseMat(p, ncols, cp, ri, vv)

    g_obj = _require(doc, "G")
    if m == 0:
        if g_obj is not None:
            raise SchemaError("'G' must be null when m == 0", key="G")
        G = SparseMat.zeros(0, n)
    else:
        if g_obj is None:
            raise SchemaError("'G' must not be null when m > 0", key="G")
        cp, ri, vv, ncols = _matrix(g_obj, "G", SparseMat)
        G = SparseMat(m, ncols, cp, ri, vv)

    c = _float_list(_require(doc, "c"), "c")
    b = _float_list(_require(doc, "b"), "b")
    h = _float_list(_require(doc, "h"), "h")
    prob = ProblemData(n=n, p=p, P=P, c=c, A=A, b=b, G=G, h=h, cones=cones)
    return validate(prob)


def read_problem(path) -> ProblemData:
    with open(path, "r", encoding="utf-8") as f:
        return parse_problem(f.read())


def _mat_doc(M: SparseMat):
    return {"colptr": M.colptr.tolist(), "rowidx": M.rowidx.tolist(),
            "vals": M.vals.tolist()}


def dump_problem(prob: ProblemData) -> str:
    doc = {
        "version": 1,
        "n": prob.n,
        "p": prob.p,
        "l": prob.cones.l,
        "q": list(prob.cones.soc_dims),
        "P": _mat_doc(prob.P),
        "c": prob.c.tolist(),
        "A": _mat_doc(prob.A) if prob.p > 0 else None,
        "b": prob.b.tolist(),
        "G": _mat_doc(prob.G) if prob.m > 0 else None,
        "h": prob.h.tolist(),
    }
    return json.dumps(doc)


def write_problem(prob: ProblemData, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_problem(prob))
