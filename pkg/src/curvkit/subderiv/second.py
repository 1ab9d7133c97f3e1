"""Second subderivatives: the dispatch table and the calculus rules."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from curvkit.core.extreal import extreal_sum
from curvkit.core.smooth import Combination, SmoothMap
from curvkit.errors import (
    AssumptionNotDeclared,
    DimensionMismatch,
    IndeterminateSum,
    MissingCandidates,
    NoBound,
    PreconditionViolated,
    Unsupported,
)
from curvkit.lp import RationalLP, lp_feasible
from curvkit.sets.atoms import Box, ClosedSet, Polyhedron, is_exact_atom
from curvkit.sets.geometry import _lift_direction, box_as_polyhedron, member, tangent_status
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
)
from curvkit.subderiv.first import ZERO_TOL, _vec, max_index_set, sum_values, subderivative
from curvkit.subderiv.indicator import d2_indicator
from curvkit.subderiv.values import BoundedValue, Kind, exact, lower, upper

TOL = 1e-9
NULL_SAMPLES = 32

# Atoms whose closed-form value is attained along every sequence t -> 0, so
# that separable sums of them add exactly.
_CLOSED_FORM = (Smooth, EuclNorm, VecMax, L0)


def _close(a, b) -> bool:
    return float(np.linalg.norm(a - b)) <= TOL * (1.0 + float(np.linalg.norm(b)))


def _pairing_tol(zs, w) -> float:
    return TOL * (1.0 + float(np.linalg.norm(zs))) * (1.0 + float(np.linalg.norm(w)))


def d2(h: FunctionExpr, z, zs, w) -> BoundedValue:
    """Second subderivative of ``h`` at ``z`` for ``zs`` in direction ``w``."""
    z, zs, w = _vec(h, z), _vec(h, zs), _vec(h, w)
    shortcut = _trivial_infinity(h, z, zs, w)
    if shortcut is not None:
        return shortcut
    return _dispatch(h, z, zs, w)


def _trivial_infinity(h, z, zs, w):
    try:
        d1 = subderivative(h, z, w)
    except (NoBound, Unsupported, MissingCandidates):
        return None
    ip = float(zs @ w)
    tol = _pairing_tol(zs, w)
    if d1.is_lower and d1.value > ip + tol:
        return exact(math.inf, "first subderivative exceeds the pairing, value +inf")
    if d1.is_upper and d1.value < ip - tol:
        return exact(-math.inf, "first subderivative below the pairing, value -inf")
    return None


def _smooth_value(grad, hess, zs, w, rule):
    if _close(zs, grad):
        return exact(float(w @ hess @ w), rule)
    return exact(-math.inf, "smooth: multiplier differs from the gradient, value -inf")


def _is_closed_form(h) -> bool:
    if isinstance(h, _CLOSED_FORM):
        return True
    if isinstance(h, Indicator):
        return is_exact_atom(h.S)
    return False


def _dispatch(h, z, zs, w) -> BoundedValue:
    if isinstance(h, Smooth):
        return _smooth_value(h.f.gradient(z), h.f.hessian(z)[0], zs, w, "smooth: Hessian form")
    if isinstance(h, Indicator):
        return d2_indicator(h.S, z, zs, w)
    if isinstance(h, EuclNorm):
        nz = float(np.linalg.norm(z))
        if nz <= ZERO_TOL:
            if float(np.linalg.norm(zs)) <= 1.0 + TOL:
                return exact(0.0, "norm at the origin: subgradient in the unit ball, value 0")
            return exact(-math.inf, "norm at the origin: multiplier outside the unit ball, value -inf")
        u = z / nz
        hess = (np.eye(len(z)) - np.outer(u, u)) / nz
        return _smooth_value(u, hess, zs, w, "norm away from the origin: Hessian form")
    if isinstance(h, VecMax):
        return _d2_vecmax(z, zs, w)
    if isinstance(h, L0):
        return _d2_l0(z, zs, w)
    if isinstance(h, Dist):
        if float(np.linalg.norm(zs)) > 1.0 + TOL:
            return exact(-math.inf, "distance: multiplier outside the unit ball, value -inf")
        if member(h.S, z) and tangent_status(h.S, z, w).member:
            return d2_dist(h.S, z, zs, w)
        return lower(-math.inf, "distance: no rule for this direction")
    if isinstance(h, SumSmooth):
        grad = h.f0.gradient(z)
        rest = d2(h.rest, z, zs - grad, w)
        curv = h.f0.curvature(z, w)
        return BoundedValue(extreal_sum(curv, rest.value), rest.kind, rest.witness, ("sum with smooth term",) + rest.trace)
    if isinstance(h, SeparableSum):
        parts = [d2(p, a, b, c) for p, a, b, c in zip(h.parts, h.split(z), h.split(zs), h.split(w))]
        irregular = sum(1 for p in h.parts if not _is_closed_form(p))
        return sum_values(parts, irregular <= 1, "separable sum of blocks")
    if isinstance(h, Scaled):
        return d2(h.h, z, zs / h.alpha, w).scaled(h.alpha).with_trace("positive scaling")
    if isinstance(h, Compose):
        return d2_chain(h.g, h.F, z, zs, w)
    if isinstance(h, MarginalFinite):
        return d2_marginal_finite(
            h.phi, z, zs, w, h.minimizers_at(z), lambda y: h.direction_grid(z, y, w), h.inner_calm_star
        )
    raise Unsupported(f"second subderivative of {type(h).__name__}")


def _d2_vecmax(z, zs, w) -> BoundedValue:
    I = max_index_set(z)
    top = max(w[i] for i in I)
    IW = [i for i in I if w[i] >= top - TOL * (1.0 + abs(top))]
    zt = TOL * (1.0 + float(np.linalg.norm(zs)))
    off = [i for i in range(len(z)) if i not in IW]
    in_simplex = (
        all(zs[i] >= -zt for i in IW)
        and all(abs(zs[i]) <= zt for i in off)
        and abs(float(sum(zs[i] for i in IW)) - 1.0) <= zt
    )
    if in_simplex:
        return exact(0.0, "max: multiplier in the simplex of maximal direction components, value 0")
    return exact(-math.inf, "max: multiplier outside the simplex, value -inf")


def _d2_l0(z, zs, w) -> BoundedValue:
    zero = np.abs(z) <= ZERO_TOL
    if (np.abs(w[zero]) > ZERO_TOL).any():
        return exact(math.inf, "zero-count: direction leaves a zero component, value +inf")
    ip = float(zs @ w)
    tol = _pairing_tol(zs, w)
    if ip < -tol:
        return exact(math.inf, "zero-count: negative pairing, value +inf")
    if ip > tol:
        return exact(-math.inf, "zero-count: positive pairing, value -inf")
    zt = TOL * (1.0 + float(np.linalg.norm(zs)))
    if (np.abs(zs[~zero]) <= zt).all():
        return exact(0.0, "zero-count: multiplier vanishes on the support, value 0")
    return exact(-math.inf, "zero-count: multiplier nonzero on the support, value -inf")


def d2_dist(S: ClosedSet, z, zs, w) -> BoundedValue:
    """Lower estimate of the distance function's second subderivative by the indicator's."""
    if float(np.linalg.norm(zs)) > 1.0 + TOL:
        raise PreconditionViolated("multiplier norm exceeds 1")
    if not tangent_status(S, z, w).member:
        raise PreconditionViolated("direction is not tangent")
    val = d2_indicator(S, z, zs, w)
    if not val.is_lower:
        raise NoBound("indicator value is only an upper bound")
    return BoundedValue(val.value, Kind.LOWER_BOUND, val.witness, ("distance: bounded below by the indicator",) + val.trace)


def _candidate_multipliers(J, xs, y_extra, seed: int = 0):
    """Particular solution of J^T y = xs plus null-space samples, and injected ones."""
    m = J.shape[0]
    y0, *_ = np.linalg.lstsq(J.T, xs, rcond=None)
    tol = TOL * (1.0 + float(np.linalg.norm(xs)) + float(np.linalg.norm(J)))
    residual_ok = lambda y: float(np.linalg.norm(J.T @ y - xs)) <= tol * (1.0 + float(np.linalg.norm(y)))
    N = scipy.linalg.null_space(J.T) if m else np.zeros((0, 0))
    cands = [np.asarray(y, dtype=float).reshape(m) for y in y_extra]
    cands = [y for y in cands if residual_ok(y)]
    if residual_ok(y0):
        cands.append(y0)
        k = N.shape[1]
        if k:
            scale = 1.0 + float(np.linalg.norm(y0))
            samples = []
            for j in range(k):
                samples += [y0 + scale * N[:, j], y0 - scale * N[:, j]]
            rng = np.random.default_rng(seed)
            while len(samples) < NULL_SAMPLES:
                samples.append(y0 + scale * (N @ rng.standard_normal(k)))
            cands += samples[:NULL_SAMPLES]
    return cands, N.shape[1] == 0


def _polyhedral_multiplier(C, Fx, v, J, xs):
    """A multiplier normal to T_C(Fx) at v solving J^T y = xs, by LP (convex polyhedral C)."""
    P = box_as_polyhedron(C) if isinstance(C, Box) else C
    if not tangent_status(P, Fx, v).member:
        return None
    vt = TOL * (1.0 + float(np.linalg.norm(v)))
    K = [i for i in P.active_set(Fx) if abs(P.A[i] @ v) <= vt * (1.0 + np.linalg.norm(P.A[i]))]
    m = P.dim
    lp = RationalLP()
    y = lp.add_vars(m, "y")
    mu = lp.add_vars(len(K), "mu", nonneg=True)
    nu = lp.add_vars(len(P.E), "nu")
    for j in range(m):
        terms = {y[j]: 1}
        for var, i in zip(mu, K):
            terms[var] = -P.A[i][j]
        for var, r in zip(nu, P.E):
            terms[var] = terms.get(var, 0) - r[j]
        lp.add_eq(terms, 0)
    for col in range(J.shape[1]):
        lp.add_eq({y[j]: J[j, col] for j in range(m)}, xs[col])
    res = lp_feasible(lp)
    if not res.feasible:
        return None
    return np.array([float(res.point[j]) for j in y])


def d2_chain(g: FunctionExpr, F: SmoothMap, x, xs, u, candidates=()) -> BoundedValue:
    """Chain rule for ``g o F``: best value over multipliers ``y`` with ``J^T y = xs``."""
    x = np.asarray(x, dtype=float).reshape(F.dim_in)
    xs = np.asarray(xs, dtype=float).reshape(F.dim_in)
    u = np.asarray(u, dtype=float).reshape(F.dim_in)
    if g.dim != F.dim_out:
        raise DimensionMismatch("outer function does not match the inner map")
    Fx = F.value(x)
    J = F.jacobian(x)
    H = F.hessian(x)
    v = J @ u
    extra = [np.asarray(c, dtype=float) for c in candidates]
    if isinstance(g, Smooth):
        extra.append(g.f.gradient(Fx))
    if isinstance(g, Indicator) and isinstance(g.S, (Polyhedron, Box)):
        y_lp = _polyhedral_multiplier(g.S, Fx, v, J, xs)
        if y_lp is not None:
            extra.append(y_lp)
    cands, full_rank = _candidate_multipliers(J, xs, extra)
    if not cands:
        kind = Kind.EXACT if full_rank else Kind.LOWER_BOUND
        return BoundedValue(-math.inf, kind, None, ("chain rule: no multiplier solves the adjoint equation",))
    quad = np.einsum("kij,i,j->k", H, u, u)
    best = None
    for y in cands:
        try:
            inner = d2(g, Fx, y, v)
        except (NoBound, IndeterminateSum):
            continue
        if not inner.is_lower:
            continue
        total = extreal_sum(float(y @ quad), inner.value)
        if best is None or total > best[0]:
            best = (total, y, inner)
    if best is None:
        raise NoBound("no multiplier gave a lower estimate")
    total, y, inner = best
    kind = Kind.EXACT if (full_rank and inner.exact) else Kind.LOWER_BOUND
    rule = "chain rule: full row rank equality" if kind is Kind.EXACT else "chain rule: lower estimate over multipliers"
    return BoundedValue(total, kind, {"multiplier": y.tolist()}, (rule,) + inner.trace)


def d2_nonsmooth_chain(g: FunctionExpr, F, x, xs, u, ys, v, Fx=None) -> BoundedValue:
    """Lower estimate: second subderivative of <ys, F> plus that of ``g`` at ``F(x)`` for ``ys`` along ``v``.

    ``F`` is either a smooth map or an expression for the scalarization
    ``<ys, F>``; in the latter case ``Fx`` must be given.
    """
    ys = np.asarray(ys, dtype=float)
    if isinstance(F, SmoothMap):
        scal = Smooth(Combination(F, ys))
        Fx = F.value(x)
    else:
        scal = F
        if Fx is None:
            raise PreconditionViolated("the value F(x) is needed for a nonsmooth inner map")
    a = d2(scal, x, xs, u)
    b = d2(g, Fx, ys, v)
    if not (a.is_lower and b.is_lower):
        raise NoBound("a summand is only an upper bound")
    try:
        total = extreal_sum(a.value, b.value)
    except IndeterminateSum as exc:
        raise NoBound(str(exc)) from exc
    return BoundedValue(total, Kind.LOWER_BOUND, {"multiplier": ys.tolist()}, ("calm chain rule: lower estimate",) + a.trace + b.trace)


def d2_preimage(C: ClosedSet, F: SmoothMap, x, xs, u, candidates=()) -> BoundedValue:
    """Indicator of ``F^{-1}(C)`` through the chain rule."""
    x = np.asarray(x, dtype=float).reshape(F.dim_in)
    if not member(C, F.value(x)):
        raise PreconditionViolated("base point is not in the pre-image")
    return d2_chain(Indicator(C), F, x, xs, u, candidates).with_trace("pre-image rule")


def d2_image(
    Q: ClosedSet,
    G: SmoothMap,
    x,
    xs,
    u,
    candidates,
    inner_semicompact: bool = False,
    inner_calm_star: bool = False,
) -> BoundedValue:
    """Upper estimate for the indicator of ``G(Q)`` over candidate pairs ``(z, v)``.

    ``v`` may be ``None``, in which case a tangent lift with ``G'(z) v = u``
    is searched for.
    """
    if not inner_semicompact:
        raise AssumptionNotDeclared("image rule needs declared inner semicompactness")
    candidates = list(candidates)
    if not candidates:
        raise MissingCandidates("image rule needs candidate pre-images")
    x = np.asarray(x, dtype=float).reshape(G.dim_out)
    xs = np.asarray(xs, dtype=float).reshape(G.dim_out)
    u = np.asarray(u, dtype=float).reshape(G.dim_out)
    ip = float(xs @ u)
    tol = _pairing_tol(xs, u)
    if ip < -tol:
        return exact(math.inf, "image: negative pairing, value +inf")
    pairs = []
    for z, v in candidates:
        z = np.asarray(z, dtype=float).reshape(G.dim_in)
        if float(np.linalg.norm(G.value(z) - x)) > 1e-8 * (1.0 + float(np.linalg.norm(x))):
            raise PreconditionViolated("candidate does not map to the base point")
        M = G.jacobian(z)
        lifts = [] if v is None else [np.asarray(v, dtype=float).reshape(G.dim_in)]
        auto = _lift_direction(Q, z, M, u, TOL)
        if auto is not None:
            lifts.append(auto)
        for vv in lifts:
            if float(np.linalg.norm(M @ vv - u)) > 1e-8 * (1.0 + float(np.linalg.norm(u))):
                raise PreconditionViolated("candidate direction does not map to u")
            pairs.append((z, vv, M))
    tangent_pairs = [(z, vv, M) for z, vv, M in pairs if tangent_status(Q, z, vv).member]
    if not tangent_pairs:
        return exact(math.inf, "image: no candidate lifts the direction tangentially, value +inf")
    best = None
    skipped = False
    for z, vv, M in tangent_pairs:
        inner = d2_indicator(Q, z, M.T @ xs, vv)
        if not inner.is_upper:
            skipped = True
            continue
        total = extreal_sum(-G.curvature(z, vv, xs), inner.value)
        if best is None or total < best[0]:
            best = (total, z, vv)
    if best is None:
        raise NoBound("no candidate gave an upper estimate")
    total, z, vv = best
    kind = Kind.EXACT_OVER_CANDIDATES if (inner_calm_star and abs(ip) <= tol and not skipped) else Kind.UPPER_BOUND
    return BoundedValue(total, kind, {"z": z.tolist(), "v": vv.tolist()}, ("image rule: infimum over candidates",))


def d2_marginal_finite(phi: FunctionExpr, x, xs, u, minimizers, direction_grid=None, inner_calm_star=False) -> BoundedValue:
    """Upper estimate for ``inf_y phi(., y)`` over listed minimizers and lifted directions."""
    minimizers = [np.asarray(y, dtype=float).reshape(-1) for y in minimizers]
    if not minimizers:
        raise MissingCandidates("marginal rule needs candidate minimizers")
    x = np.asarray(x, dtype=float).reshape(-1)
    xs = np.asarray(xs, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    best = None
    skipped = False
    for y in minimizers:
        grid = direction_grid(y) if direction_grid is not None else [np.zeros(len(y))]
        for v in grid:
            v = np.asarray(v, dtype=float).reshape(len(y))
            try:
                val = d2(phi, np.concatenate([x, y]), np.concatenate([xs, np.zeros(len(y))]), np.concatenate([u, v]))
            except NoBound:
                skipped = True
                continue
            if not val.is_upper:
                skipped = True
            elif best is None or val.value < best[0]:
                best = (val.value, y, v)
    if best is None:
        raise NoBound("no candidate gave an upper estimate")
    value, y, v = best
    # Exactness over the candidates needs every candidate value, not just some.
    kind = Kind.EXACT_OVER_CANDIDATES if (inner_calm_star and not skipped) else Kind.UPPER_BOUND
    return BoundedValue(value, kind, {"y": y.tolist(), "v": v.tolist()}, ("marginal rule: infimum over candidates",))


def d2_graph_indicator(F: SmoothMap, x, y, xs, ys, u, v) -> BoundedValue:
    """Indicator of the graph of ``F`` bounded below by the scalarization ``<-ys, F>``."""
    x = np.asarray(x, dtype=float).reshape(F.dim_in)
    y = np.asarray(y, dtype=float).reshape(F.dim_out)
    if float(np.linalg.norm(F.value(x) - y)) > 1e-8 * (1.0 + float(np.linalg.norm(y))):
        raise PreconditionViolated("point is not on the graph")
    ys = np.asarray(ys, dtype=float).reshape(F.dim_out)
    v = np.asarray(v, dtype=float).reshape(F.dim_out)
    val = d2(Smooth(Combination(F, -ys)), x, xs, u)
    on_tangent = _close(v, F.jacobian(x) @ np.asarray(u, dtype=float))
    kind = val.kind if on_tangent else Kind.LOWER_BOUND
    rule = "graph: scalarization equality" if kind is Kind.EXACT else "graph: scalarization lower estimate"
    return BoundedValue(val.value, kind, None, (rule,) + val.trace)
