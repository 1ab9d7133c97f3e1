"""Membership, tangent cones and normal cones of the set atoms."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.optimize

from curvkit.core.rational import to_fraction
from curvkit.errors import InfeasibleBase, Unsupported
from curvkit.lp import RationalLP, lp_feasible
from curvkit.sets import soc
from curvkit.sets.atoms import (
    ACTIVE_TOL,
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
    is_polyhedral,
)

INF = np.inf


class Ternary(Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"

    def __bool__(self):
        return self is Ternary.YES


@dataclass(frozen=True)
class TangentAnswer:
    """Result of a tangent-cone query.

    ``estimate`` is ``"exact"``, ``"outer"`` (a True answer might be wrong)
    or ``"inner"`` (a False answer might be wrong).
    """

    member: bool
    estimate: str = "exact"

    @property
    def exact(self) -> bool:
        if self.estimate == "outer":
            return not self.member
        if self.estimate == "inner":
            return self.member
        return True

    def __bool__(self):
        return self.member


def _scaled_tol(tol, *arrays) -> float:
    return tol * (1.0 + max((float(np.max(np.abs(a), initial=0.0)) for a in arrays), default=0.0))


def member(S: ClosedSet, y, tol: float = ACTIVE_TOL) -> bool:
    y = atoms_dim_check(S, y)
    if isinstance(S, Polyhedron):
        ok = True
        if S.num_ineq:
            ok = bool(np.all(S.A @ y <= S.b + tol * (1.0 + np.abs(S.b) + np.abs(S.A) @ np.abs(y))))
        if ok and len(S.e):
            ok = bool(np.all(np.abs(S.E @ y - S.e) <= tol * (1.0 + np.abs(S.e) + np.abs(S.E) @ np.abs(y))))
        return ok
    if isinstance(S, PolyhedralUnion):
        return any(member(b, y, tol) for b in S.branches)
    if isinstance(S, Box):
        with np.errstate(invalid="ignore"):
            lo_ok = (y >= S.lower - tol * (1.0 + np.abs(np.where(np.isinf(S.lower), 0, S.lower)))).all()
            hi_ok = (y <= S.upper + tol * (1.0 + np.abs(np.where(np.isinf(S.upper), 0, S.upper)))).all()
        return bool(lo_ok and hi_ok)
    if isinstance(S, SecondOrderCone):
        return soc.location(y, tol) != "outside"
    if isinstance(S, Product):
        return all(member(f, part, tol) for f, part in zip(S.factors, S.split(y)))
    if isinstance(S, PreImage):
        return member(S.inner, S.F.value(y), tol)
    if isinstance(S, Image):
        for z in S.preimages_of(y, max(tol, 1e-9)):
            if member(S.inner, z, tol) and np.linalg.norm(S.G.value(z) - y) <= _scaled_tol(max(tol, 1e-9), y):
                return True
        return False
    raise Unsupported(f"membership in {type(S).__name__}")


def box_as_polyhedron(B: Box) -> Polyhedron:
    rows, rhs = [], []
    n = B.dim
    for j in range(n):
        if np.isfinite(B.upper[j]):
            r = [0.0] * n
            r[j] = 1.0
            rows.append(r)
            rhs.append(float(B.upper[j]))
        if np.isfinite(B.lower[j]):
            r = [0.0] * n
            r[j] = -1.0
            rows.append(r)
            rhs.append(-float(B.lower[j]))
    return Polyhedron(rows, rhs, dim=n)


def active_branches(U: PolyhedralUnion, y, tol: float = ACTIVE_TOL) -> list[int]:
    """J(y): branches containing ``y``."""
    return [i for i, P in enumerate(U.branches) if member(P, y, tol)]


def tangent_branches(U: PolyhedralUnion, y, v, tol: float = ACTIVE_TOL) -> list[int]:
    """J(y; v): branches containing ``y`` to which ``v`` is tangent."""
    return [i for i in active_branches(U, y, tol) if tangent_status(U.branches[i], y, v, tol).member]


def _box_location(B: Box, y, tol):
    at_lo = np.abs(y - B.lower) <= tol * (1.0 + np.abs(np.where(np.isinf(B.lower), 0, B.lower)))
    at_hi = np.abs(y - B.upper) <= tol * (1.0 + np.abs(np.where(np.isinf(B.upper), 0, B.upper)))
    return at_lo, at_hi


def _full_row_rank(M) -> bool:
    M = np.atleast_2d(M)
    return np.linalg.matrix_rank(M) == M.shape[0]


def tangent_status(S: ClosedSet, y, v, tol: float = ACTIVE_TOL) -> TangentAnswer:
    y = atoms_dim_check(S, y)
    v = atoms_dim_check(S, v)
    vt = _scaled_tol(tol, v)
    if isinstance(S, Polyhedron):
        I = S.active_set(y, tol)
        ok = all(S.A[i] @ v <= vt * (1.0 + np.linalg.norm(S.A[i])) for i in I)
        if ok and len(S.e):
            ok = bool(np.all(np.abs(S.E @ v) <= vt * (1.0 + np.linalg.norm(S.E, axis=1))))
        return TangentAnswer(bool(ok))
    if isinstance(S, PolyhedralUnion):
        return TangentAnswer(bool(tangent_branches(S, y, v, tol)))
    if isinstance(S, Box):
        at_lo, at_hi = _box_location(S, y, tol)
        ok = np.all(~at_lo | (v >= -vt)) and np.all(~at_hi | (v <= vt))
        return TangentAnswer(bool(ok))
    if isinstance(S, SecondOrderCone):
        where = soc.location(y, tol)
        if where == "interior":
            return TangentAnswer(True)
        if where == "apex":
            return TangentAnswer(soc.in_cone(v, tol))
        if where == "boundary":
            return TangentAnswer(soc.tail_inner(y, v) <= y[0] * v[0] + _scaled_tol(tol, y) * (1 + np.linalg.norm(v)))
        raise InfeasibleBase("base point outside the cone")
    if isinstance(S, Product):
        answers = [tangent_status(f, a, b, tol) for f, a, b in zip(S.factors, S.split(y), S.split(v))]
        if any(not a.member and a.exact for a in answers):
            return TangentAnswer(False)
        member_all = all(a.member for a in answers)
        if all(a.exact for a in answers):
            return TangentAnswer(member_all)
        return TangentAnswer(member_all, "outer" if member_all else "inner")
    if isinstance(S, PreImage):
        Fy = S.F.value(y)
        J = S.F.jacobian(y)
        inner = tangent_status(S.inner, Fy, J @ v, tol)
        if not inner.member:
            return TangentAnswer(False, "exact" if inner.exact else "inner")
        if inner.exact and _full_row_rank(J):
            return TangentAnswer(True)
        return TangentAnswer(True, "outer")
    if isinstance(S, Image):
        for z in S.preimages_of(y):
            if _lift_direction(S.inner, z, S.G.jacobian(z), v, tol) is not None:
                return TangentAnswer(True)
        return TangentAnswer(False, "inner")
    raise Unsupported(f"tangent cone of {type(S).__name__}")


def tangent_member(S: ClosedSet, y, v, tol: float = ACTIVE_TOL) -> bool:
    return tangent_status(S, y, v, tol).member


def _polyhedral_cone_rows(S: ClosedSet, y, tol):
    """Rows (ineq, eq) describing T_S(y) for a convex polyhedral atom."""
    if isinstance(S, Box):
        S = box_as_polyhedron(S)
    I = S.active_set(y, tol)
    return S.A[I], S.E


def _lift_direction(Q: ClosedSet, z, M, v, tol):
    """Some ``w`` in T_Q(z) with ``M w = v``, or None when none is found."""
    M = np.atleast_2d(M)
    n = M.shape[1]
    pieces = None
    if isinstance(Q, (Polyhedron, Box)):
        pieces = [_polyhedral_cone_rows(Q, z, tol)]
    elif isinstance(Q, PolyhedralUnion):
        pieces = [_polyhedral_cone_rows(Q.branches[i], z, tol) for i in active_branches(Q, z, tol)]
    if pieces is not None:
        for A_t, E_t in pieces:
            lp = RationalLP()
            lp.add_vars(n, "w")
            for row, rhs in zip(M, v):
                lp.add_eq(list(row), rhs)
            for row in A_t:
                lp.add_le(list(row), 0)
            for row in E_t:
                lp.add_eq(list(row), 0)
            res = lp_feasible(lp)
            if res.feasible:
                return np.array([float(x) for x in res.point])
        return None
    w0, *_ = np.linalg.lstsq(M, v, rcond=None)
    if np.linalg.norm(M @ w0 - v) > _scaled_tol(1e-9, v):
        return None
    trials = [w0]
    N = scipy.linalg.null_space(M)
    for k in range(N.shape[1]):
        trials += [w0 + N[:, k], w0 - N[:, k]]
    for w in trials:
        if tangent_status(Q, z, w, tol).member:
            return w
    return None


def tangent_cone(S: ClosedSet, y, tol: float = ACTIVE_TOL) -> ClosedSet:
    """T_S(y) as a set atom, for the exact atoms."""
    y = atoms_dim_check(S, y)
    if isinstance(S, Polyhedron):
        I = S.active_set(y, tol)
        A_ex, _, E_ex, _ = S.exact_data()
        if S.rational:
            return Polyhedron([list(A_ex[i]) for i in I], [0] * len(I), [list(r) for r in E_ex], [0] * len(E_ex), dim=S.dim)
        return Polyhedron(S.A[I], np.zeros(len(I)), S.E, np.zeros(len(S.e)), dim=S.dim)
    if isinstance(S, Box):
        at_lo, at_hi = _box_location(S, y, tol)
        lo = np.where(at_lo, 0.0, -INF)
        hi = np.where(at_hi, 0.0, INF)
        return Box(lo, hi)
    if isinstance(S, SecondOrderCone):
        where = soc.location(y, tol)
        if where == "interior":
            return Box(np.full(S.s, -INF), np.full(S.s, INF))
        if where == "apex":
            return S
        return Polyhedron([soc.q_vector(y)], [0.0])
    if isinstance(S, PolyhedralUnion):
        J = active_branches(S, y, tol)
        if not J:
            raise InfeasibleBase("base point outside the union")
        return PolyhedralUnion(tuple(tangent_cone(S.branches[i], y, tol) for i in J))
    if isinstance(S, Product):
        return Product(tuple(tangent_cone(f, part, tol) for f, part in zip(S.factors, S.split(y))))
    raise Unsupported(f"tangent cone of {type(S).__name__} as a set")


def normal_of_tangent_member(P, y, v, lam, tol: float = ACTIVE_TOL, exact: bool = False) -> bool:
    """Whether ``lam`` lies in the normal cone of T_P(y) at ``v``.

    That cone is generated by the active rows orthogonal to ``v`` plus the
    span of the equality rows; membership is an exact rational LP.
    """
    if isinstance(P, Box):
        P = box_as_polyhedron(P)
    y = atoms_dim_check(P, y)
    v = atoms_dim_check(P, v)
    lam = atoms_dim_check(P, lam)
    if not tangent_status(P, y, v, tol).member:
        raise InfeasibleBase("direction is not tangent to the polyhedron")
    vt = _scaled_tol(tol, v)
    K = [i for i in P.active_set(y, tol) if abs(P.A[i] @ v) <= vt * (1.0 + np.linalg.norm(P.A[i]))]
    if not (exact or P.rational):
        return _cone_residual(P.A[K], P.E, lam) <= _scaled_tol(tol, lam, P.A[K], P.E)
    A_ex, _, E_ex, _ = P.exact_data()
    lp = RationalLP(exact=True)
    mu = lp.add_vars(len(K), "mu", nonneg=True)
    nu = lp.add_vars(len(E_ex), "nu")
    for j in range(P.dim):
        terms = {}
        for var, i in zip(mu, K):
            terms[var] = A_ex[i][j]
        for var, r in zip(nu, E_ex):
            terms[var] = r[j]
        lp.add_eq(terms, to_fraction(lam[j], exact))
    return lp_feasible(lp).feasible


def _cone_residual(nonneg_rows, free_rows, target) -> float:
    """Distance from ``target`` to ``cone(nonneg_rows) + span(free_rows)``."""
    target = np.asarray(target, dtype=float)
    n = len(target)
    free = np.asarray(free_rows, dtype=float).reshape(-1, n)
    G = np.vstack([np.asarray(nonneg_rows, dtype=float).reshape(-1, n), free, -free])
    if not len(G):
        return float(np.linalg.norm(target))
    return float(scipy.optimize.nnls(G.T, target)[1])


def _soc_normal_dir(y, w, z, tol) -> bool:
    """z in N_Q(y) with <z, w> = 0 assumed checked by the caller."""
    zt = _scaled_tol(tol, z)
    where = soc.location(y, tol)
    if where == "interior":
        return float(np.linalg.norm(z)) <= zt
    if where == "apex":
        return soc.in_cone(-z, tol)
    q = soc.q_vector(y)
    beta = float(z @ q) / float(q @ q)
    return beta >= -zt and float(np.linalg.norm(z - beta * q)) <= zt


def _box_normal_dir(B: Box, y, w, z, tol) -> bool:
    at_lo, at_hi = _box_location(B, y, tol)
    zt = _scaled_tol(tol, z)
    wt = _scaled_tol(tol, w)
    for j in range(B.dim):
        if at_lo[j] and at_hi[j]:
            continue
        if at_hi[j]:
            if z[j] < -zt or (abs(w[j]) > wt and abs(z[j]) > zt):
                return False
        elif at_lo[j]:
            if z[j] > zt or (abs(w[j]) > wt and abs(z[j]) > zt):
                return False
        elif abs(z[j]) > zt:
            return False
    return True


def convex_normal_dir_member(S: ClosedSet, y, w, z, tol: float = ACTIVE_TOL) -> bool:
    """``z`` in N_S(y) ∩ {w}^perp for convex atoms and ``w`` tangent."""
    y = atoms_dim_check(S, y)
    w = atoms_dim_check(S, w)
    z = atoms_dim_check(S, z)
    if isinstance(S, Product):
        return all(
            convex_normal_dir_member(f, a, b, c, tol)
            for f, a, b, c in zip(S.factors, S.split(y), S.split(w), S.split(z))
        )
    if abs(float(z @ w)) > _scaled_tol(tol, z) * (1.0 + np.linalg.norm(w)):
        return False
    if isinstance(S, Polyhedron):
        return normal_of_tangent_member(S, y, w, z, tol)
    if isinstance(S, Box):
        return _box_normal_dir(S, y, w, z, tol)
    if isinstance(S, SecondOrderCone):
        return _soc_normal_dir(y, w, z, tol)
    raise Unsupported(f"{type(S).__name__} is not a convex atom")


def proximal_normal_member(S: ClosedSet, y, w, z, mode: str = "normal", tol: float = ACTIVE_TOL) -> Ternary:
    """Membership of ``z`` in the directional proximal (pre-)normal cone of S at y in direction w.

    ``mode`` is ``"pre"`` for the pre-normal cone or ``"normal"`` for the
    cone intersected with the orthogonal complement of ``w``.
    """
    if mode not in ("pre", "normal"):
        raise ValueError("mode must be 'pre' or 'normal'")
    y = atoms_dim_check(S, y)
    w = atoms_dim_check(S, w)
    z = atoms_dim_check(S, z)
    tangent = tangent_status(S, y, w, tol)
    if not tangent.member and tangent.exact:
        return Ternary.NO
    ip = float(z @ w)
    ip_tol = _scaled_tol(tol, z) * (1.0 + np.linalg.norm(w))
    if ip > ip_tol:
        return Ternary.NO
    if ip < -ip_tol:
        if mode == "normal":
            return Ternary.NO
        return Ternary.YES if tangent.member and tangent.exact else Ternary.UNKNOWN
    # <z, w> = 0: pre-normal and normal membership coincide.
    if tangent.exact and tangent.member:
        if is_convex_atom(S):
            return Ternary.YES if convex_normal_dir_member(S, y, w, z, tol) else Ternary.NO
        if isinstance(S, PolyhedralUnion):
            J = tangent_branches(S, y, w, tol)
            ok = all(normal_of_tangent_member(S.branches[i], y, w, z, tol) for i in J)
            return Ternary.YES if ok else Ternary.NO
    from curvkit.subderiv.indicator import d2_indicator

    return d2_indicator(S, y, z, w).prenormal_verdict()


__all__ = [
    "Ternary",
    "TangentAnswer",
    "member",
    "tangent_status",
    "tangent_member",
    "tangent_cone",
    "active_branches",
    "tangent_branches",
    "box_as_polyhedron",
    "normal_of_tangent_member",
    "convex_normal_dir_member",
    "proximal_normal_member",
    "is_polyhedral",
]
