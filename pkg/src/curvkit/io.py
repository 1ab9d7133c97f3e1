"""JSON documents for problems and function queries.

A document with ``"kind"`` equal to ``"function"`` describes a single
second-subderivative query (a :class:`FunctionBundle`); the other kinds
describe a :class:`~curvkit.sosc.ProblemInstance`. Scalars may be numbers,
rational strings such as ``"1/3"``, or ``"inf"``/``"-inf"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from curvkit.core.rational import parse_scalar
from curvkit.core.smooth import AffineMap, PolyForm, SmoothMap, Stack
from curvkit.errors import DimensionMismatch, SchemaError
from curvkit.sets.atoms import Box, Image, Polyhedron, PolyhedralUnion, PreImage, Product, SecondOrderCone
from curvkit.subderiv.expr import Compose, Dist, EuclNorm, Indicator, L0, SeparableSum, Smooth, SumSmooth, VecMax

PROBLEM_KINDS = ("geometric", "disjunctive", "socp", "structured", "composite")


@dataclass(eq=False)
class FunctionBundle:
    """A function with one query ``(point, multiplier, direction)``."""

    h: object
    point: np.ndarray
    multiplier: np.ndarray
    direction: np.ndarray
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    name: str = ""


def _need(doc, key, ptr):
    if not isinstance(doc, dict):
        raise SchemaError(ptr or "/", "expected an object")
    if key not in doc:
        raise SchemaError(f"{ptr}/{key}", "missing")
    return doc[key]


def _scalar(x, ptr):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise SchemaError(ptr, "expected a number or rational string")
    try:
        return parse_scalar(x)
    except (ValueError, ZeroDivisionError):
        raise SchemaError(ptr, f"bad scalar {x!r}") from None


def _vector(x, ptr, exact=False):
    if not isinstance(x, list):
        raise SchemaError(ptr, "expected an array")
    vals = [_scalar(v, f"{ptr}/{i}") for i, v in enumerate(x)]
    return vals if exact else np.array([float(v) for v in vals], dtype=float)


def _matrix(x, ptr, exact=False):
    if not isinstance(x, list) or any(not isinstance(r, list) for r in x):
        raise SchemaError(ptr, "expected an array of arrays")
    return [_vector(r, f"{ptr}/{i}", exact) for i, r in enumerate(x)]


# Smooth maps.


def parse_polyform(doc, ptr, dim: int) -> PolyForm:
    kind = _need(doc, "kind", ptr)
    c = float(_scalar(doc.get("c", 0), f"{ptr}/c"))
    a = _vector(doc["a"], f"{ptr}/a") if "a" in doc else None
    if a is not None and len(a) != dim:
        raise SchemaError(f"{ptr}/a", f"expected length {dim}")
    if kind == "affine":
        return PolyForm("affine", dim, a=a, c=c)
    Q = None
    if "Q" in doc:
        Q = np.array(_matrix(doc["Q"], f"{ptr}/Q"), dtype=float)
        if Q.shape != (dim, dim):
            raise SchemaError(f"{ptr}/Q", f"expected a {dim}x{dim} matrix")
    if kind == "quadratic":
        return PolyForm("quadratic", dim, a=a, Q=Q, c=c)
    if kind == "cubic":
        terms = []
        for i, t in enumerate(doc.get("terms", [])):
            tp = f"{ptr}/terms/{i}"
            powers = _need(t, "powers", tp)
            if not isinstance(powers, list) or len(powers) != dim:
                raise SchemaError(f"{tp}/powers", f"expected {dim} exponents")
            terms.append((float(_scalar(_need(t, "coef", tp), f"{tp}/coef")), powers))
        try:
            return PolyForm("cubic", dim, a=a, Q=Q, c=c, terms=terms)
        except ValueError as exc:
            raise SchemaError(f"{ptr}/terms", str(exc)) from None
    raise SchemaError(f"{ptr}/kind", f"unknown polynomial kind {kind!r}")


def parse_map(doc, ptr, dim: int) -> SmoothMap:
    """A vector map: a list of PolyForms, or ``{"type": "affine_map", "A", "b"}``."""
    if isinstance(doc, dict) and doc.get("type") == "affine_map":
        A = np.array(_matrix(_need(doc, "A", ptr), f"{ptr}/A"), dtype=float).reshape(-1, dim)
        b = _vector(doc["b"], f"{ptr}/b") if "b" in doc else None
        return AffineMap(A, b)
    if not isinstance(doc, list) or not doc:
        raise SchemaError(ptr, "expected a nonempty list of polynomials")
    parts = [parse_polyform(d, f"{ptr}/{i}", dim) for i, d in enumerate(doc)]
    return parts[0] if len(parts) == 1 else Stack(tuple(parts))


def dump_polyform(f: PolyForm) -> dict:
    out = {"kind": f.kind}
    if f.kind == "affine":
        out["a"] = f.a.tolist()
    else:
        if np.any(f.a):
            out["a"] = f.a.tolist()
        if np.any(f.Q):
            out["Q"] = f.Q.tolist()
    if f.kind == "cubic":
        out["terms"] = [{"coef": float(c), "powers": p.tolist()} for c, p in zip(f.coefs, f.powers)]
    if f.c:
        out["c"] = f.c
    return out


def dump_map(F: SmoothMap):
    if isinstance(F, AffineMap):
        return {"type": "affine_map", "A": F.A.tolist(), "b": F.b.tolist()}
    if isinstance(F, PolyForm):
        return [dump_polyform(F)]
    if isinstance(F, Stack) and all(isinstance(p, PolyForm) for p in F.parts):
        return [dump_polyform(p) for p in F.parts]
    raise TypeError(f"cannot serialize {type(F).__name__}")


# Sets.

SET_TYPES = ("polyhedron", "union", "box", "soc", "product", "preimage", "image")


def parse_set(doc, ptr="/set"):
    kind = _need(doc, "type", ptr)
    try:
        if kind == "polyhedron":
            A = _matrix(doc.get("A", []), f"{ptr}/A", exact=True)
            E = _matrix(doc.get("E", []), f"{ptr}/E", exact=True)
            b = _vector(doc.get("b", []), f"{ptr}/b", exact=True)
            e = _vector(doc.get("e", []), f"{ptr}/e", exact=True)
            return Polyhedron(A, b, E, e, dim=doc.get("dim"))
        if kind == "union":
            branches = _need(doc, "branches", ptr)
            return PolyhedralUnion(tuple(parse_set(b, f"{ptr}/branches/{i}") for i, b in enumerate(branches)))
        if kind == "box":
            return Box(_vector(_need(doc, "lower", ptr), f"{ptr}/lower"), _vector(_need(doc, "upper", ptr), f"{ptr}/upper"))
        if kind == "soc":
            return SecondOrderCone(int(_need(doc, "dim", ptr)))
        if kind == "product":
            factors = _need(doc, "factors", ptr)
            return Product(tuple(parse_set(f, f"{ptr}/factors/{i}") for i, f in enumerate(factors)))
        if kind == "preimage":
            dim = int(_need(doc, "dim", ptr))
            return PreImage(parse_map(_need(doc, "map", ptr), f"{ptr}/map", dim), parse_set(_need(doc, "set", ptr), f"{ptr}/set"))
        if kind == "image":
            inner = parse_set(_need(doc, "set", ptr), f"{ptr}/set")
            G = parse_map(_need(doc, "map", ptr), f"{ptr}/map", inner.dim)
            cands = [(c["point"], c["preimages"]) for c in doc.get("candidates", [])]
            a = doc.get("assumptions", {})
            return Image(G, inner, tuple(cands), bool(a.get("inner_semicompact")), bool(a.get("inner_calm_star")))
    except (DimensionMismatch, ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(ptr, str(exc)) from None
    raise SchemaError(f"{ptr}/type", f"unknown set type {kind!r}")


def _exact_json(v: Fraction):
    if v.denominator == 1:
        return int(v)
    return f"{v.numerator}/{v.denominator}"


def _bound_json(x: float):
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def dump_set(S) -> dict:
    if isinstance(S, Polyhedron):
        A, b, E, e = S.exact_data()
        conv = _exact_json if S.rational else float
        out = {"type": "polyhedron", "dim": S.dim}
        if A:
            out["A"] = [[conv(v) for v in r] for r in A]
            out["b"] = [conv(v) for v in b]
        if E:
            out["E"] = [[conv(v) for v in r] for r in E]
            out["e"] = [conv(v) for v in e]
        return out
    if isinstance(S, PolyhedralUnion):
        return {"type": "union", "branches": [dump_set(b) for b in S.branches]}
    if isinstance(S, Box):
        return {"type": "box", "lower": [_bound_json(v) for v in S.lower], "upper": [_bound_json(v) for v in S.upper]}
    if isinstance(S, SecondOrderCone):
        return {"type": "soc", "dim": S.s}
    if isinstance(S, Product):
        return {"type": "product", "factors": [dump_set(f) for f in S.factors]}
    if isinstance(S, PreImage):
        return {"type": "preimage", "dim": S.dim, "map": dump_map(S.F), "set": dump_set(S.inner)}
    if isinstance(S, Image):
        return {
            "type": "image",
            "map": dump_map(S.G),
            "set": dump_set(S.inner),
            "candidates": [{"point": list(c.point), "preimages": [list(z) for z in c.preimages]} for c in S.candidates],
            "assumptions": {"inner_semicompact": S.inner_semicompact, "inner_calm_star": S.inner_calm_star},
        }
    raise TypeError(f"cannot serialize {type(S).__name__}")


# Functions.


def parse_function(doc, ptr="/function"):
    kind = _need(doc, "type", ptr)
    if kind == "smooth":
        dim = int(_need(doc, "dim", ptr))
        return Smooth(parse_polyform(_need(doc, "f", ptr), f"{ptr}/f", dim))
    if kind == "indicator":
        return Indicator(parse_set(_need(doc, "set", ptr), f"{ptr}/set"))
    if kind == "dist":
        return Dist(parse_set(_need(doc, "set", ptr), f"{ptr}/set"))
    if kind in ("eucl_norm", "vec_max", "l0"):
        n = int(_need(doc, "dim", ptr))
        return {"eucl_norm": EuclNorm, "vec_max": VecMax, "l0": L0}[kind](n)
    if kind == "separable":
        parts = _need(doc, "parts", ptr)
        return SeparableSum(tuple(parse_function(q, f"{ptr}/parts/{i}") for i, q in enumerate(parts)))
    if kind == "compose":
        g = parse_function(_need(doc, "outer", ptr), f"{ptr}/outer")
        dim = int(_need(doc, "dim", ptr))
        return Compose(g, parse_map(_need(doc, "map", ptr), f"{ptr}/map", dim))
    if kind == "sum_smooth":
        rest = parse_function(_need(doc, "rest", ptr), f"{ptr}/rest")
        return SumSmooth(parse_polyform(_need(doc, "f0", ptr), f"{ptr}/f0", rest.dim), rest)
    raise SchemaError(f"{ptr}/type", f"unknown function type {kind!r}")


def dump_function(h) -> dict:
    if isinstance(h, Smooth):
        return {"type": "smooth", "dim": h.dim, "f": dump_polyform(h.f)}
    if isinstance(h, Indicator):
        return {"type": "indicator", "set": dump_set(h.S)}
    if isinstance(h, Dist):
        return {"type": "dist", "set": dump_set(h.S)}
    for cls, name in ((EuclNorm, "eucl_norm"), (VecMax, "vec_max"), (L0, "l0")):
        if isinstance(h, cls):
            return {"type": name, "dim": h.n}
    if isinstance(h, SeparableSum):
        return {"type": "separable", "parts": [dump_function(q) for q in h.parts]}
    if isinstance(h, Compose):
        return {"type": "compose", "dim": h.dim, "outer": dump_function(h.g), "map": dump_map(h.F)}
    if isinstance(h, SumSmooth):
        return {"type": "sum_smooth", "f0": dump_polyform(h.f0), "rest": dump_function(h.rest)}
    raise TypeError(f"cannot serialize {type(h).__name__}")


# Documents.


def parse_document(doc):
    """A :class:`ProblemInstance` or :class:`FunctionBundle` from a decoded JSON object."""
    from curvkit.sosc.problem import ProblemInstance

    kind = _need(doc, "kind", "")
    if kind == "function":
        h = parse_function(_need(doc, "function", ""))
        vecs = {}
        for key in ("point", "multiplier", "direction"):
            vecs[key] = _vector(_need(doc, key, ""), f"/{key}")
            if len(vecs[key]) != h.dim:
                raise DimensionMismatch(f"/{key} has length {len(vecs[key])}, expected {h.dim}")
        return FunctionBundle(h, grid=dict(doc.get("grid", {})), tolerances=dict(doc.get("tolerances", {})), name=doc.get("name", ""), **vecs)
    if kind not in PROBLEM_KINDS:
        raise SchemaError("/kind", f"unknown kind {kind!r}")
    n = _need(doc, "variables", "")
    if not isinstance(n, int) or n <= 0:
        raise SchemaError("/variables", "expected a positive integer")
    f0 = parse_polyform(_need(doc, "objective", ""), "/objective", n)
    F = parse_map(_need(doc, "map", ""), "/map", n)
    x = _vector(_need(doc, "point", ""), "/point")
    if len(x) != n:
        raise DimensionMismatch(f"/point has length {len(x)}, expected {n}")
    a = doc.get("assumptions", {})
    kw = dict(
        kind=kind,
        f0=f0,
        F=F,
        x=x,
        inner_semicompact=bool(a.get("inner_semicompact", False)),
        inner_calm_star=bool(a.get("inner_calm_star", False)),
        apex_rays=tuple(_vector(r, f"/apex_rays/{i}") for i, r in enumerate(doc.get("apex_rays", []))),
        name=doc.get("name", ""),
    )
    if kind == "composite":
        kw["g"] = parse_function(_need(doc, "outer", ""), "/outer")
    elif kind == "structured":
        ell = int(_need(doc, "lifted_variables", ""))
        kw["H"] = parse_map(_need(doc, "H", ""), "/H", ell)
        kw["G"] = parse_map(_need(doc, "G", ""), "/G", ell)
        kw["D"] = parse_set(_need(doc, "D", ""), "/D")
        kw["phi_candidates"] = tuple(_vector(z, f"/candidates/{i}") for i, z in enumerate(doc.get("candidates", [])))
    else:
        kw["C"] = parse_set(_need(doc, "set", ""), "/set")
    p = ProblemInstance(**kw)
    p.meta = {k: doc[k] for k in ("directions", "grid", "tolerances") if k in doc}
    return p


def dump_document(obj) -> dict:
    if isinstance(obj, FunctionBundle):
        out = {
            "kind": "function",
            "function": dump_function(obj.h),
            "point": obj.point.tolist(),
            "multiplier": obj.multiplier.tolist(),
            "direction": obj.direction.tolist(),
        }
        if obj.name:
            out["name"] = obj.name
        if obj.grid:
            out["grid"] = obj.grid
        if obj.tolerances:
            out["tolerances"] = obj.tolerances
        return out
    p = obj
    out = {"kind": p.kind.value, "variables": p.n, "objective": dump_polyform(p.f0), "map": dump_map(p.F), "point": p.x.tolist()}
    if p.name:
        out["name"] = p.name
    if p.kind.value == "composite":
        out["outer"] = dump_function(p.g)
    elif p.kind.value == "structured":
        out["lifted_variables"] = p.H.dim_in
        out.update(H=dump_map(p.H), G=dump_map(p.G), D=dump_set(p.D), candidates=[z.tolist() for z in p.phi_candidates])
    else:
        out["set"] = dump_set(p.C)
    if p.inner_semicompact or p.inner_calm_star:
        out["assumptions"] = {"inner_semicompact": p.inner_semicompact, "inner_calm_star": p.inner_calm_star}
    if p.apex_rays:
        out["apex_rays"] = [r.tolist() for r in p.apex_rays]
    out.update(p.meta)
    return out


def load(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON: {exc}") from None
    return parse_document(doc)


parse_problem = load


def dumps(obj) -> str:
    return json.dumps(dump_document(obj), indent=2, sort_keys=True)
