"""JSON (de)serialization with deterministic, 17-significant-digit output.

Polytopes: {"dim": n, "vertices": [[...], ...]} and/or
           {"halfspaces": [{"normal": [...], "offset": r}, ...]};
           both forms are accepted, canonical output is the vertex form with
           rows sorted lexicographically.

Functions: {"type": "pa", "pieces": [{"grad": [...], "c": r}, ...],
            "domain": POLY | null, "cylinder": bool?}
           {"type": "plq", "cells": [{"poly": POLY, "A": [[...]],
            "b": [...], "c": r}, ...]}
           {"type": "indicator", "domain": POLY}
"""

from __future__ import annotations

import json

import numpy as np

from .errors import BadInput
from .funcs import AffineFn, ConvexFn, PAFn, PLQFn, QuadraticFn, certify_plq
from .geometry import Polytope, hull, vertices_from_halfspaces


# ---------------------------------------------------------------------------
# canonical writer


def _fmt_float(x: float) -> str:
    if x != x:
        raise BadInput("cannot serialize NaN")
    if x in (float("inf"), float("-inf")):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(float(x), ".17g")
    return s


def _write(obj, out: list):
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(k))
            out.append(":")
            _write(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(",")
            _write(v, out)
        out.append("]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise BadInput(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    out: list[str] = []
    _write(obj, out)
    return "".join(out) + "\n"


# ---------------------------------------------------------------------------
# polytopes


def polytope_to_dict(P: Polytope) -> dict:
    return {"dim": P.dim, "vertices": P.vertices}


def polytope_from_dict(d: dict) -> Polytope:
    if "vertices" in d and d["vertices"]:
        verts = np.asarray(d["vertices"], dtype=float)
        if verts.ndim == 1:
            verts = verts[:, None]
        return hull(verts)
    if "halfspaces" in d:
        rows = d["halfspaces"]
        A = np.array([r["normal"] for r in rows], dtype=float)
        b = np.array([r["offset"] for r in rows], dtype=float)
        dim = d.get("dim", A.shape[1])
        pts = vertices_from_halfspaces(A, b, int(dim))
        if len(pts) == 0:
            raise BadInput("halfspace description is empty or unbounded")
        return hull(pts)
    raise BadInput("polytope needs 'vertices' or 'halfspaces'")


# ---------------------------------------------------------------------------
# functions


def function_to_dict(u: ConvexFn) -> dict:
    if isinstance(u, PAFn):
        if len(u.pieces) == 1 and u.domain is not None \
                and np.all(u.pieces[0].grad == 0.0) and u.pieces[0].c == 0.0 \
                and not u.is_cylinder:
            return {"type": "indicator", "domain": polytope_to_dict(u.domain)}
        d = {
            "type": "pa",
            "pieces": [{"grad": p.grad, "c": p.c} for p in u.pieces],
            "domain": None if u.domain is None else polytope_to_dict(u.domain),
        }
        if u.is_cylinder:
            d["cylinder"] = True
        return d
    if isinstance(u, PLQFn):
        return {
            "type": "plq",
            "cells": [
                {"poly": polytope_to_dict(P), "A": q.A, "b": q.b, "c": q.c}
                for P, q in u.cells
            ],
        }
    if hasattr(u, "as_plq"):
        return function_to_dict(u.as_plq())
    raise BadInput(f"cannot serialize {type(u).__name__}")


def function_from_dict(d: dict) -> ConvexFn:
    kind = d.get("type")
    if kind == "indicator":
        return PAFn.indicator(polytope_from_dict(d["domain"]))
    if kind == "pa":
        pieces = [AffineFn(np.asarray(p["grad"], dtype=float), float(p["c"]))
                  for p in d["pieces"]]
        dom = d.get("domain")
        dom = None if dom is None else polytope_from_dict(dom)
        return PAFn(pieces, dom, is_cylinder=bool(d.get("cylinder", False)))
    if kind == "plq":
        cells = [
            (polytope_from_dict(c["poly"]),
             QuadraticFn(np.asarray(c["A"], dtype=float),
                         np.asarray(c["b"], dtype=float), float(c["c"])))
            for c in d["cells"]
        ]
        return certify_plq(cells)
    raise BadInput(f"unknown function type {kind!r}")


def load_function(path: str) -> ConvexFn:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadInput(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    return function_from_dict(data)


def save(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))
