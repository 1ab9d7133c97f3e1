"""Second subderivatives of indicator functions of the set atoms."""

from __future__ import annotations

import math

import numpy as np

from curvkit.core.extreal import extreal_total
from curvkit.errors import IndeterminateSum, NoBound, PreconditionViolated
from curvkit.sets import soc
from curvkit.sets.atoms import (
    Box,
    ClosedSet,
    Image,
    Polyhedron,
    PolyhedralUnion,
    PreImage,
    Product,
    SecondOrderCone,
    atoms_dim_check,
    is_convex_atom,
    is_exact_atom,
)
from curvkit.sets.geometry import convex_normal_dir_member, member, tangent_branches, tangent_status
from curvkit.subderiv.values import BoundedValue, Kind, exact, lower

IP_TOL = 1e-9

NOT_TANGENT = "indicator: direction not tangent, value +inf"
DESCENT = "indicator: negative pairing with the direction, value +inf"
ASCENT = "indicator: positive pairing along a tangent direction, value -inf"


def _ip_tol(zs, w) -> float:
    return IP_TOL * (1.0 + float(np.linalg.norm(zs))) * (1.0 + float(np.linalg.norm(w)))


def d2_indicator_scalar_halfline(zs: float, w: float) -> float:
    """Second subderivative of the indicator of the nonpositive reals at 0."""
    zs, w = float(zs), float(w)
    if w > 0 or zs * w < 0:
        return math.inf
    if zs >= 0 and zs * w == 0:
        return 0.0
    return -math.inf


def d2_indicator(S: ClosedSet, z, zs, w) -> BoundedValue:
    """Second subderivative of the indicator of ``S`` at ``z`` for ``zs`` in direction ``w``."""
    z = atoms_dim_check(S, z)
    zs = atoms_dim_check(S, zs)
    w = atoms_dim_check(S, w)
    if isinstance(S, PreImage):
        from curvkit.subderiv.second import d2_preimage

        return d2_preimage(S.inner, S.F, z, zs, w)
    if isinstance(S, Image):
        from curvkit.subderiv.second import d2_image

        return d2_image(
            S.inner,
            S.G,
            z,
            zs,
            w,
            [(p, None) for p in S.preimages_of(z)],
            inner_semicompact=S.inner_semicompact,
            inner_calm_star=S.inner_calm_star,
        )
    if not member(S, z):
        raise PreconditionViolated("base point outside the set")
    ts = tangent_status(S, z, w)
    if not ts.member and ts.exact:
        return exact(math.inf, NOT_TANGENT)
    ip = float(zs @ w)
    tol = _ip_tol(zs, w)
    if ip < -tol:
        return exact(math.inf, DESCENT)
    if ip > tol and ts.member and ts.exact:
        return exact(-math.inf, ASCENT)
    if isinstance(S, (Polyhedron, Box)):
        ok = convex_normal_dir_member(S, z, w, zs)
        if ok:
            return exact(0.0, "polyhedral indicator: normal to the tangent cone, value 0")
        return exact(-math.inf, "polyhedral indicator: not normal to the tangent cone, value -inf")
    if isinstance(S, PolyhedralUnion):
        return d2_indicator_polyunion(S, z, zs, w)
    if isinstance(S, SecondOrderCone):
        return d2_indicator_soc(S.s, z, zs, w)
    if isinstance(S, Product):
        return d2_indicator_product(S.factors, z, zs, w)
    raise NoBound(f"no second-order rule for {type(S).__name__}")


def d2_indicator_polyunion(S: PolyhedralUnion, z, zs, w) -> BoundedValue:
    """Infimum of the branch values over branches to which ``w`` is tangent."""
    J = tangent_branches(S, z, w)
    if not J:
        return exact(math.inf, "union: no branch tangent, infimum over the empty set")
    vals = [(d2_indicator(S.branches[i], z, zs, w).value, i) for i in J]
    best, idx = min(vals)
    return BoundedValue(best, Kind.EXACT, {"branch": idx, "tangent_branches": J}, ("union: infimum over tangent branches",))


def d2_indicator_soc(s: int, y, ys, v) -> BoundedValue:
    """Closed form on the second-order cone of dimension ``s``."""
    Q = SecondOrderCone(int(s))
    y = atoms_dim_check(Q, y)
    ys = atoms_dim_check(Q, ys)
    v = atoms_dim_check(Q, v)
    where = soc.location(y)
    if where == "outside":
        raise PreconditionViolated("base point outside the cone")
    if not tangent_status(Q, y, v).member:
        return exact(math.inf, NOT_TANGENT)
    ip = float(ys @ v)
    tol = _ip_tol(ys, v)
    if ip < -tol:
        return exact(math.inf, DESCENT)
    if ip > tol:
        return exact(-math.inf, ASCENT)
    zt = IP_TOL * (1.0 + float(np.linalg.norm(ys)))
    if where == "interior":
        if float(np.linalg.norm(ys)) <= zt:
            return exact(0.0, "cone interior: zero multiplier, value 0")
        return exact(-math.inf, "cone interior: nonzero multiplier, value -inf")
    if where == "apex":
        if soc.in_cone(-ys):
            return exact(0.0, "cone apex: polar multiplier orthogonal to the direction, value 0")
        return exact(-math.inf, "cone apex: multiplier not in the polar cone, value -inf")
    q = soc.q_vector(y)
    beta = float(ys @ q) / float(q @ q)
    on_ray = beta >= -zt and float(np.linalg.norm(ys - beta * q)) <= zt
    if on_ray:
        value = max(beta, 0.0) / float(y[0]) * soc.boundary_curvature(y, v)
        return BoundedValue(
            value,
            Kind.EXACT,
            {"beta": beta},
            ("cone boundary: curvature of the boundary along the direction",),
        )
    return lower(-math.inf, "cone boundary: multiplier off the normal ray, lower estimate -inf")


def d2_indicator_product(factors, z, zs, w) -> BoundedValue:
    """Sum of the factor values; exact when every factor is an exact atom with an exact value."""
    factors = tuple(factors)
    P = Product(factors)
    zi, zsi, wi = P.split(z), P.split(zs), P.split(w)
    vals = [d2_indicator(f, a, b, c) for f, a, b, c in zip(factors, zi, zsi, wi)]
    if not all(v.is_lower for v in vals):
        raise NoBound("a factor value is only an upper bound")
    try:
        total = extreal_total(v.value for v in vals)
    except IndeterminateSum:
        # Opposite infinities: for convex factors the multiplier then fails to
        # be normal to the tangent cone of the product, so the value is -inf.
        if all(is_convex_atom(f) for f in factors):
            polyhedral = all(isinstance(f, (Polyhedron, Box)) for f in factors)
            kind = Kind.EXACT if polyhedral else Kind.LOWER_BOUND
            return BoundedValue(-math.inf, kind, None, ("product of convex sets: opposite factor infinities",))
        raise NoBound("product factors give opposite infinities")
    ok = all(v.exact for v in vals) and all(is_exact_atom(f) for f in factors)
    kind = Kind.EXACT if ok else Kind.LOWER_BOUND
    trace = ("product: sum of factor values",) + tuple(t for v in vals for t in v.trace)
    return BoundedValue(total, kind, None, trace)
