"""Multiplier sets and the linear descriptions of the multiplier cones."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from curvkit.core.rational import to_fraction
from curvkit.errors import InfeasibleBase, Unsupported
from curvkit.lp import RationalLP
from curvkit.sets import soc
from curvkit.sets.atoms import ACTIVE_TOL, Box, ClosedSet, Polyhedron, PolyhedralUnion, Product, SecondOrderCone
from curvkit.sets.geometry import box_as_polyhedron, tangent_branches, tangent_status

APEX_RAYS = 64
RESID_TOL = 1e-9


@dataclass(frozen=True)
class MultiplierSpace:
    """``{particular + basis @ c}``; ``basis`` has one column per free direction."""

    particular: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def point(self, c) -> np.ndarray:
        return self.particular + self.basis @ np.asarray(c, dtype=float)

    def contains(self, lam, tol: float = RESID_TOL) -> bool:
        d = np.asarray(lam, dtype=float) - self.particular
        if self.dim:
            d = d - self.basis @ (self.basis.T @ d)
        return float(np.linalg.norm(d)) <= tol * (1.0 + np.linalg.norm(lam))


def multiplier_space(p, alpha: float) -> MultiplierSpace | None:
    """Solutions of ``alpha grad f0(x) + J^T lam = 0``; None when there are none."""
    Jt = p.jac.T
    rhs = -alpha * p.grad0
    lam, *_ = np.linalg.lstsq(Jt, rhs, rcond=None)
    if np.linalg.norm(Jt @ lam - rhs) > RESID_TOL * (1.0 + np.linalg.norm(rhs)):
        return None
    return MultiplierSpace(lam, scipy.linalg.null_space(Jt))


@dataclass
class BlockTerms:
    """What a multiplier block contributes to the certified quantity.

    ``curvature`` holds ``(var, block, fn)``: the term is ``fn(v[block]) * var``
    for the constraint-space direction ``v``.
    """

    curvature: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    rules: list = field(default_factory=list)


def _scaled_tol(tol, *arrays) -> float:
    return tol * (1.0 + max(float(np.max(np.abs(a), initial=0.0)) for a in arrays))


def _tie(lp: RationalLP, lam_vars, gens, exact: bool):
    """``lam = sum_k gens[k][1] * gens[k][0]`` (var, vector pairs) componentwise."""
    for j, lv in enumerate(lam_vars):
        terms = {lv: 1}
        for var, vec in gens:
            c = to_fraction(vec[j], exact)
            if c:
                terms[var] = terms.get(var, 0) - c
        lp.add_eq(terms, 0)


def _polyhedron_block(lp, P: Polyhedron, y, v, lam_vars, exact, tol):
    # lam in N_{T_P(y)}(v): generated by active rows orthogonal to v plus the equality rows.
    vt = _scaled_tol(tol, v)
    K = [i for i in P.active_set(y, tol) if abs(P.A[i] @ v) <= vt * (1.0 + np.linalg.norm(P.A[i]))]
    A_ex, _, E_ex, _ = P.exact_data()
    use_exact = exact or P.rational
    gens = []
    for i in K:
        gens.append((lp.add_var(f"mu{i}", nonneg=True), A_ex[i] if P.rational else P.A[i]))
    for k in range(len(P.e)):
        gens.append((lp.add_var(f"nu{k}"), E_ex[k] if P.rational else P.E[k]))
    _tie(lp, lam_vars, gens, use_exact)


def sampled_apex_rays(s: int, count: int = APEX_RAYS) -> list[np.ndarray]:
    """Rays ``(-1, theta)`` with ``theta`` on the unit sphere of the tail."""
    if s == 3:
        ang = 2 * np.pi * np.arange(count) / count
        thetas = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        thetas = np.random.default_rng(0).standard_normal((count, s - 1))
        thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    return [np.concatenate([[-1.0], t]) for t in thetas]


def _soc_block(lp, s, y, v, lam_vars, exact, tol, apex_rays, offset, out: BlockTerms):
    where = soc.location(y, tol)
    if where == "outside":
        raise InfeasibleBase("base point outside the cone")
    if where == "interior":
        for lv in lam_vars:
            lp.add_eq({lv: 1}, 0)
        out.rules.append("interior cone block carries no multiplier")
        return
    if where == "boundary":
        q = soc.q_vector(y)
        if abs(float(q @ v)) > _scaled_tol(tol, v):
            for lv in lam_vars:
                lp.add_eq({lv: 1}, 0)
            out.rules.append("boundary cone block with a non-orthogonal direction forces a zero multiplier")
            return
        beta = lp.add_var(f"beta@{offset}", nonneg=True)
        _tie(lp, lam_vars, [(beta, q)], exact)
        y1 = float(y[0])
        out.curvature.append((beta, slice(offset, offset + s), lambda vb, y1=y1: soc.boundary_curvature(None, vb) / y1))
        out.rules.append("boundary cone block parametrized along its normal ray with linear curvature")
        return
    # Apex: only a finite inner approximation of the normal cone is available.
    vn = float(np.linalg.norm(v))
    vt = _scaled_tol(tol, v)
    if vn <= vt:
        rays = sampled_apex_rays(s)
    elif abs(soc.tail_norm(v) - v[0]) <= vt:
        rays = [np.concatenate([[-v[0]], soc.bar(v)])]
    else:
        rays = []
    for r in apex_rays:
        r = np.asarray(r, dtype=float)
        if len(r) == s and soc.in_cone(-r, tol) and abs(float(r @ v)) <= vt * (1.0 + np.linalg.norm(r)):
            rays.append(r)
    gens = [(lp.add_var(f"gamma{k}@{offset}", nonneg=True), r) for k, r in enumerate(rays)]
    _tie(lp, lam_vars, gens, exact)
    out.rules.append("apex cone block restricted to finitely many normal rays")
    out.notes.append("apex normal cone approximated by sampled rays")


def add_normal_block(
    lp: RationalLP,
    S: ClosedSet,
    y,
    v,
    lam_vars,
    exact: bool = False,
    tol: float = ACTIVE_TOL,
    apex_rays=(),
    offset: int = 0,
    out: BlockTerms | None = None,
) -> BlockTerms:
    """Constrain ``lam_vars`` to multipliers whose set curvature at ``(y, v)`` is known.

    For polyhedral pieces the admissible multipliers form the normal cone of
    the tangent cone at ``v`` and the curvature vanishes; on second-order cone
    boundaries the multiplier runs along the normal ray and contributes a
    curvature linear in its length. ``v`` must be tangent.
    """
    out = BlockTerms() if out is None else out
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(S, Box):
        S = box_as_polyhedron(S)
    if isinstance(S, Polyhedron):
        if not tangent_status(S, y, v, tol).member:
            raise InfeasibleBase("direction is not tangent")
        _polyhedron_block(lp, S, y, v, lam_vars, exact, tol)
        out.rules.append("polyhedral block: normal cone of the tangent cone, zero curvature")
        return out
    if isinstance(S, PolyhedralUnion):
        J = tangent_branches(S, y, v, tol)
        if not J:
            raise InfeasibleBase("direction is not tangent to any active branch")
        for i in J:
            _polyhedron_block(lp, S.branches[i], y, v, lam_vars, exact, tol)
        out.rules.append(f"union block: intersection over tangent branches {J}")
        return out
    if isinstance(S, SecondOrderCone):
        _soc_block(lp, S.s, y, v, lam_vars, exact, tol, apex_rays, offset, out)
        return out
    if isinstance(S, Product):
        for f, sl in zip(S.factors, S.slices):
            add_normal_block(lp, f, y[sl], v[sl], lam_vars[sl], exact, tol, apex_rays, offset + sl.start, out)
        return out
    raise Unsupported(f"no linear multiplier description for {type(S).__name__}")


def lp_representable(S: ClosedSet) -> bool:
    if isinstance(S, (Polyhedron, Box, PolyhedralUnion, SecondOrderCone)):
        return True
    if isinstance(S, Product):
        return all(lp_representable(f) for f in S.factors)
    return False


def curvature_value(terms: BlockTerms, point, v) -> float:
    """Block curvature at an LP solution ``point`` for the direction ``v``."""
    v = np.asarray(v, dtype=float)
    return sum(float(point[var]) * fn(v[sl]) for var, sl, fn in terms.curvature)
