"""First subderivatives."""

from __future__ import annotations

import math

import numpy as np

from curvkit.core.extreal import extreal_total
from curvkit.errors import IndeterminateSum, NoBound, PreconditionViolated, Unsupported
from curvkit.sets.atoms import PolyhedralUnion, atoms_dim_check, is_convex_atom
from curvkit.sets.geometry import member, tangent_cone, tangent_status
from curvkit.sets.projection import dist, project
from curvkit.subderiv.expr import (
    Compose,
    Dist,
    EuclNorm,
    FunctionExpr,
    Indicator,
    L0,
    MarginalFinite,
    Scaled,
    SeparableSum,
    Smooth,
    SumSmooth,
    VecMax,
    is_lipschitz,
)
from curvkit.subderiv.values import BoundedValue, Kind, exact, lower, upper

ZERO_TOL = 1e-12
MAX_TOL = 1e-9


def _vec(h, z):
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape != (h.dim,):
        from curvkit.errors import DimensionMismatch

        raise DimensionMismatch(f"point of shape {z.shape} does not match dimension {h.dim}")
    return z


def max_index_set(z, tol: float = MAX_TOL) -> list[int]:
    """Indices attaining the maximum of ``z``."""
    top = float(np.max(z))
    return [i for i, v in enumerate(z) if v >= top - tol * (1.0 + abs(top))]


def combine_kinds(values: list[BoundedValue], exact_ok: bool) -> Kind:
    """Kind of a sum of bounds: lower if all are lower bounds, upper if all upper."""
    if all(v.exact for v in values):
        return Kind.EXACT if exact_ok else Kind.LOWER_BOUND
    if all(v.is_lower for v in values):
        return Kind.LOWER_BOUND
    if all(v.is_upper for v in values):
        return Kind.UPPER_BOUND
    raise NoBound("summands bound the value from opposite sides")


def sum_values(values: list[BoundedValue], exact_ok: bool, rule: str) -> BoundedValue:
    kind = combine_kinds(values, exact_ok)
    try:
        total = extreal_total(v.value for v in values)
    except IndeterminateSum as exc:
        raise NoBound(str(exc)) from exc
    trace = (rule,) + tuple(t for v in values for t in v.trace)
    return BoundedValue(total, kind, None, trace)


def subderivative(h: FunctionExpr, z, w) -> BoundedValue:
    """The first subderivative of ``h`` at ``z`` in direction ``w``."""
    z = _vec(h, z)
    w = _vec(h, w)
    if isinstance(h, Smooth):
        return exact(float(h.f.gradient(z) @ w), "smooth: gradient pairing")
    if isinstance(h, Indicator):
        if not member(h.S, z):
            raise PreconditionViolated("base point outside the set")
        ts = tangent_status(h.S, z, w)
        if ts.member:
            kind = Kind.EXACT if ts.exact else Kind.LOWER_BOUND
            return BoundedValue(0.0, kind, None, ("indicator: tangent direction",))
        kind = Kind.EXACT if ts.exact else Kind.UPPER_BOUND
        return BoundedValue(math.inf, kind, None, ("indicator: non-tangent direction",))
    if isinstance(h, EuclNorm):
        nz = float(np.linalg.norm(z))
        if nz <= ZERO_TOL:
            return exact(float(np.linalg.norm(w)), "norm at the origin")
        return exact(float(z @ w) / nz, "norm away from the origin")
    if isinstance(h, VecMax):
        I = max_index_set(z)
        return exact(float(max(w[i] for i in I)), "max over active components")
    if isinstance(h, L0):
        off = (np.abs(z) <= ZERO_TOL) & (np.abs(w) > ZERO_TOL)
        return exact(math.inf if off.any() else 0.0, "zero-count: separable table")
    if isinstance(h, Dist):
        return _dist_first(h, z, w)
    if isinstance(h, SumSmooth):
        rest = subderivative(h.rest, z, w)
        out = sum_values([exact(float(h.f0.gradient(z) @ w)), rest], rest.exact, "sum with smooth term")
        return out
    if isinstance(h, SeparableSum):
        parts = [subderivative(p, a, b) for p, a, b in zip(h.parts, h.split(z), h.split(w))]
        return sum_values(parts, True, "separable sum")
    if isinstance(h, Scaled):
        return subderivative(h.h, z, w).scaled(h.alpha).with_trace("positive scaling")
    if isinstance(h, Compose):
        J = h.F.jacobian(z)
        inner = subderivative(h.g, h.F.value(z), J @ w)
        full_rank = np.linalg.matrix_rank(J) == J.shape[0]
        if inner.exact and (full_rank or is_lipschitz(h.g)):
            return inner.with_trace("chain rule (equality)")
        if inner.is_lower:
            return inner.as_lower().with_trace("chain rule (lower estimate)")
        raise NoBound("inner subderivative is only an upper bound")
    if isinstance(h, MarginalFinite):
        return _marginal_first(h, z, w)
    raise Unsupported(f"subderivative of {type(h).__name__}")


def _dist_first(h: Dist, z, w) -> BoundedValue:
    S = h.S
    if member(S, z):
        T = tangent_cone(S, z)
        return exact(dist(T, w), "distance: distance to the tangent cone")
    # Off the set the distance is a minimum of finitely many smooth pieces.
    if not (is_convex_atom(S) or isinstance(S, PolyhedralUnion)):
        raise Unsupported("distance off the set is only available for convex atoms and unions")
    d = dist(S, z)
    slopes = [float((z - p) @ w) / d for p in project(S, z)]
    return exact(min(slopes), "distance away from the set")


def _marginal_first(h: MarginalFinite, x, u) -> BoundedValue:
    best = math.inf
    witness = None
    for y in h.minimizers_at(x):
        for v in h.direction_grid(x, y, u):
            val = subderivative(h.phi, np.concatenate([x, y]), np.concatenate([u, v]))
            if val.is_upper and val.value < best:
                best, witness = val.value, {"y": y.tolist(), "v": v.tolist()}
    return upper(best, "marginal function: infimum over candidate minimizers", witness)
