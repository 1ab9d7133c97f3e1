"""Second-order sufficient condition certifiers.

Every per-direction search looks for ``(alpha, lam)`` making the Lagrangian
curvature plus the constraint curvature strictly positive. The quantity is
linear in the multipliers once the constraint curvature is known to be zero
(polyhedral pieces) or linear along a normal ray (cone boundaries), so by
positive homogeneity strictness becomes the linear condition ``value >= 1``
and the search is an exact rational feasibility problem. Found multipliers are
re-evaluated through the second subderivative engine before a certificate is
issued.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np
import scipy.linalg

from curvkit.core.extreal import extreal_sum, to_json
from curvkit.core.rational import to_fraction
from curvkit.errors import (
    AssumptionNotDeclared,
    InfeasibleBase,
    MissingCandidates,
    NoBound,
    PreconditionViolated,
    Unsupported,
)
from curvkit.lp import RationalLP, lp_feasible
from curvkit.sets.atoms import ACTIVE_TOL
from curvkit.sets.geometry import Ternary, proximal_normal_member, tangent_member
from curvkit.subderiv.expr import Indicator, L0, SeparableSum, Smooth
from curvkit.subderiv.indicator import d2_indicator
from curvkit.subderiv.proximal import proximal_subdiff_member
from curvkit.subderiv.second import d2
from curvkit.subderiv.values import BoundedValue, Kind

from curvkit.sosc.cones import (
    _l0_zero_set,
    critical_cone_member,
    critical_pieces,
    critical_subspace,
    sample_critical_directions,
    structured_lift,
)
from curvkit.sosc.multipliers import BlockTerms, add_normal_block, lp_representable, multiplier_space
from curvkit.sosc.problem import ProblemInstance, ProblemKind

MARGIN = 1e-8
STATIONARITY_TOL = 1e-8
CANDIDATE_SCALES = (1.0, 10.0)


class Verdict(Enum):
    CERTIFIED_ON_DIRECTIONS = "CertifiedOnDirections"
    CERTIFIED_SUBSPACE_EXACT = "CertifiedSubspaceExact"
    NOT_CERTIFIED = "NotCertified"
    INCONCLUSIVE = "Inconclusive"


def _floats(v) -> list:
    return [to_json(float(t)) for t in np.asarray(v, dtype=float).ravel()]


@dataclass
class DirectionCertificate:
    """A multiplier pair making the second-order quantity positive along ``u``.

    ``value`` is reported for the normalization ``alpha = 1`` (or ``|lam| = 1``
    when ``alpha = 0``); ``normalized_value`` divides the raw value by
    ``alpha + |lam|`` and is the scale-free number used for growth constants.
    """

    u: np.ndarray
    alpha: float
    lam: np.ndarray
    value: float
    curvature_term: float
    rule_trace: list = field(default_factory=list)
    multiplier_checks: dict = field(default_factory=dict)
    normalized_value: float = 0.0
    extras: dict = field(default_factory=dict)

    def __bool__(self):
        return True

    def scaled(self, gamma: float) -> "DirectionCertificate":
        """The same certificate with ``(alpha, lam)`` multiplied by ``gamma > 0``."""
        if not gamma > 0:
            raise ValueError("scaling factor must be positive")
        return replace(
            self,
            alpha=gamma * self.alpha,
            lam=gamma * self.lam,
            value=gamma * self.value,
            curvature_term=gamma * self.curvature_term,
        )

    def to_dict(self) -> dict:
        return {
            "u": _floats(self.u),
            "alpha": to_json(self.alpha),
            "lambda": _floats(self.lam),
            "value": to_json(self.value),
            "normalized_value": to_json(self.normalized_value),
            "curvature_term": to_json(self.curvature_term),
            "rule_trace": list(self.rule_trace),
            "multiplier_checks": {k: (v.value if isinstance(v, Ternary) else v) for k, v in self.multiplier_checks.items()},
            "extras": _jsonable(self.extras),
        }


@dataclass
class NotFound:
    """No certifying multiplier was found for ``u``; this is not a refutation."""

    u: np.ndarray
    reason: str
    rule_trace: list = field(default_factory=list)

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        return {"u": _floats(self.u), "not_found": self.reason, "rule_trace": list(self.rule_trace)}


@dataclass
class Certificate:
    verdict: Verdict
    directions: list = field(default_factory=list)
    mode: dict = field(default_factory=dict)
    witness: np.ndarray | None = None
    notes: list = field(default_factory=list)
    subspace: dict | None = None

    @property
    def certified(self) -> bool:
        return self.verdict in (Verdict.CERTIFIED_ON_DIRECTIONS, Verdict.CERTIFIED_SUBSPACE_EXACT)

    @property
    def value_min(self) -> float | None:
        """Smallest normalized certified value, or None when nothing was certified."""
        vals = [d.normalized_value for d in self.directions if isinstance(d, DirectionCertificate)]
        if self.subspace and "normalized_min_eigenvalue" in self.subspace:
            vals.append(self.subspace["normalized_min_eigenvalue"])
        return min(vals) if vals else None

    @property
    def growth_eps(self) -> float | None:
        vm = self.value_min
        return None if vm is None else vm / 4.0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "witness": None if self.witness is None else _floats(self.witness),
            "mode": _jsonable(self.mode),
            "value_min": None if self.value_min is None else to_json(self.value_min),
            "notes": list(self.notes),
            "subspace": _jsonable(self.subspace),
            "directions": [d.to_dict() for d in self.directions],
        }


def _jsonable(obj):
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return to_json(float(obj))
    if isinstance(obj, Ternary):
        return obj.value
    return str(obj)


# Strategies for the geometric certifier.


@dataclass(frozen=True)
class LPSearch:
    """Exact multiplier search by rational linear feasibility."""


@dataclass(frozen=True)
class FixedMultiplier:
    alpha: float
    lam: tuple


@dataclass(frozen=True)
class SuppliedList:
    pairs: tuple  # of (alpha, lam)


# Direction sources.


@dataclass(frozen=True)
class SubspaceExact:
    pass


@dataclass(frozen=True)
class SampledSphere:
    n: int = 64
    seed: int = 0


@dataclass(frozen=True)
class DirectionsList:
    directions: tuple


@dataclass(frozen=True)
class Auto:
    """Subspace proof when available, otherwise sampled directions."""

    n: int = 64
    seed: int = 0


def parse_mode(text: str, seed: int = 0):
    """``subspace``, ``sphere:N`` or ``sphere:N,SEED``, ``auto``."""
    text = text.strip()
    if text == "subspace":
        return SubspaceExact()
    if text == "auto":
        return Auto(seed=seed)
    if text.startswith("sphere"):
        _, _, rest = text.partition(":")
        parts = [t for t in rest.split(",") if t]
        n = int(parts[0]) if parts else 64
        s = int(parts[1]) if len(parts) > 1 else seed
        return SampledSphere(n, s)
    raise ValueError(f"unknown certification mode {text!r}")


# LP assembly.


def _lam_value(point, var) -> float:
    return float(point[var])


def _curv_coeffs(terms: BlockTerms, v) -> dict:
    out = {}
    for var, sl, fn in terms.curvature:
        out[var] = out.get(var, 0.0) + float(fn(np.asarray(v, dtype=float)[sl]))
    return out


def _value_row(alpha_var, lam_vars, q0, q, curv: dict, exact: bool, extra=None) -> dict:
    row = {alpha_var: to_fraction(q0, exact)}
    for lv, qk in zip(lam_vars, q):
        row[lv] = row.get(lv, 0) + to_fraction(qk, exact)
    for var, c in curv.items():
        row[var] = row.get(var, 0) + to_fraction(c, exact)
    for var, c in (extra or {}).items():
        row[var] = row.get(var, 0) + to_fraction(c, exact)
    return row


def _base_lp(p: ProblemInstance, exact: bool, alpha_min: int = 0):
    lp = RationalLP(exact=exact)
    a = lp.add_var("alpha", nonneg=True)
    lam = lp.add_vars(p.m, "lam")
    J = p.jac
    for j in range(p.n):
        terms = {a: to_fraction(p.grad0[j], exact)}
        for k, lv in enumerate(lam):
            c = to_fraction(J[k, j], exact)
            if c:
                terms[lv] = c
        lp.add_eq(terms, 0)
    if alpha_min:
        lp.add_ge({a: 1}, alpha_min)
    return lp, a, lam


def _composite_block(lp, g, y, v, lam_vars, alpha_var, exact, offset=0, out=None) -> BlockTerms:
    """Multiplier constraints of the outer function, homogenized in ``alpha``."""
    out = BlockTerms() if out is None else out
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(g, Smooth):
        grad = g.f.gradient(y)
        hess = g.f.hessian(y)[0]
        for lv, gk in zip(lam_vars, grad):
            lp.add_eq({lv: 1, alpha_var: -to_fraction(gk, exact)}, 0)
        out.curvature.append((alpha_var, slice(offset, offset + g.dim), lambda vb, hess=hess: float(vb @ hess @ vb)))
        out.rules.append("smooth outer block: multiplier equals the gradient, Hessian curvature")
        return out
    if isinstance(g, L0):
        zero = set(_l0_zero_set(y))
        for i, lv in enumerate(lam_vars):
            if i not in zero:
                lp.add_eq({lv: 1}, 0)
        out.rules.append("counting block: multipliers vanish off the zero set, zero curvature there")
        return out
    if isinstance(g, Indicator) and lp_representable(g.S):
        return add_normal_block(lp, g.S, y, v, lam_vars, exact, offset=offset, out=out)
    if isinstance(g, SeparableSum):
        for part, sl in zip(g.parts, g.slices):
            _composite_block(lp, part, y[sl], v[sl], lam_vars[sl], alpha_var, exact, offset + sl.start, out)
        return out
    raise Unsupported(f"no linear multiplier description for {type(g).__name__}")


def _normalize(alpha: float, lam: np.ndarray):
    if alpha > 0:
        return 1.0 / alpha
    nrm = float(np.linalg.norm(lam))
    return 1.0 / nrm if nrm > 0 else 1.0


def _solve(lp):
    res = lp_feasible(lp)
    return res.point if res.feasible else None


def _constraint_curvature(p: ProblemInstance, lam, v) -> BoundedValue:
    if p.kind is ProblemKind.COMPOSITE:
        return d2(p.g, p.y, lam, v)
    return d2_indicator(p.C, p.y, lam, v)


def direction_quantity(p: ProblemInstance, u, alpha: float, lam) -> BoundedValue:
    """``alpha u^T f0'' u + sum lam_k u^T F_k'' u`` plus the engine's constraint curvature."""
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    v = p.jac @ u
    try:
        curv = _constraint_curvature(p, lam, v)
    except NoBound:
        return BoundedValue(-math.inf, Kind.UPPER_BOUND, trace=("no bound on the constraint curvature",))
    base = p.lagrangian_curvature(u, alpha, lam)
    return replace(curv, value=extreal_sum(base, curv.value), trace=curv.trace)


def _issue(p, u, alpha, lam, rules, notes, extras=None) -> DirectionCertificate | NotFound:
    """Recheck a multiplier pair with the engine and package it."""
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    s = _normalize(alpha, lam)
    alpha, lam = alpha * s, lam * s
    resid = p.stationarity_residual(alpha, lam)
    scale = 1.0 + np.linalg.norm(p.grad0) + np.linalg.norm(p.jac)
    if resid > STATIONARITY_TOL * scale * (1.0 + np.linalg.norm(lam)):
        return NotFound(u, f"stationarity residual {resid:.3g}", rules)
    total = direction_quantity(p, u, alpha, lam)
    if not total.is_lower:
        return NotFound(u, "engine returned only an upper estimate of the constraint curvature", rules + list(total.trace))
    if not total.value > MARGIN:
        return NotFound(u, f"second-order quantity {total.value:.6g} is not positive", rules + list(total.trace))
    v = p.jac @ u
    checks = {"stationarity_residual": resid, "pairing": float(lam @ v)}
    if p.kind is ProblemKind.COMPOSITE:
        checks["proximal_subdifferential"] = proximal_subdiff_member(p.g, p.y, v, lam, "plain")
    else:
        checks["proximal_normal"] = proximal_normal_member(p.C, p.y, v, lam, "normal")
    if Ternary.NO in checks.values():
        return NotFound(u, "multiplier fails the proximal membership check", rules)
    base = p.lagrangian_curvature(u, alpha, lam)
    value = float(total.value)
    return DirectionCertificate(
        u=u,
        alpha=float(alpha),
        lam=lam,
        value=value,
        curvature_term=float(value - base),
        rule_trace=list(rules) + list(total.trace) + [f"note: {n}" for n in notes],
        multiplier_checks=checks,
        normalized_value=value / (alpha + float(np.linalg.norm(lam))),
        extras=extras or {},
    )


def _lp_direction(p: ProblemInstance, u, exact: bool) -> DirectionCertificate | NotFound:
    u = np.asarray(u, dtype=float)
    v = p.jac @ u
    composite = p.kind is ProblemKind.COMPOSITE
    lp, a, lam = _base_lp(p, exact, alpha_min=1 if composite else 0)
    if composite:
        terms = _composite_block(lp, p.g, p.y, v, lam, a, exact)
    else:
        terms = add_normal_block(lp, p.C, p.y, v, lam, exact, apex_rays=p.apex_rays)
    q0, q = p.quad_terms(u)
    lp.add_ge(_value_row(a, lam, q0, q, _curv_coeffs(terms, v), exact), 1)
    rules = ["stationarity of the Lagrangian"] + terms.rules + ["strictness by homogeneity: value >= 1"]
    point = _solve(lp)
    if point is None:
        return NotFound(u, "multiplier LP infeasible", rules)
    alpha = float(point[a])
    lam_val = np.array([float(point[lv]) for lv in lam])
    return _issue(p, u, alpha, lam_val, rules, terms.notes)


def _candidate_pairs(p: ProblemInstance):
    out = []
    if p.kind is ProblemKind.COMPOSITE and isinstance(p.g, Smooth):
        out.append((1.0, p.g.f.gradient(p.y)))
    sp = multiplier_space(p, 1.0)
    if sp is not None:
        out.append((1.0, sp.particular))
        for k in range(sp.dim):
            for s in CANDIDATE_SCALES:
                out += [(1.0, sp.particular + s * sp.basis[:, k]), (1.0, sp.particular - s * sp.basis[:, k])]
    if p.kind is not ProblemKind.COMPOSITE:
        sp0 = multiplier_space(p, 0.0)
        for k in range(sp0.dim):
            out += [(0.0, sp0.basis[:, k]), (0.0, -sp0.basis[:, k])]
    return out


def _candidate_direction(p, u, pairs, rules) -> DirectionCertificate | NotFound:
    best = None
    reasons = []
    for alpha, lam in pairs:
        cert = _issue(p, u, float(alpha), np.asarray(lam, dtype=float), rules, [])
        if cert:
            if best is None or cert.normalized_value > best.normalized_value:
                best = cert
        else:
            reasons.append(cert.reason)
    if best is not None:
        return best
    return NotFound(u, "no candidate multiplier certifies: " + "; ".join(sorted(set(reasons))[:3]), rules)


def _check_direction(p, u):
    u = np.asarray(u, dtype=float).reshape(p.n)
    if not np.linalg.norm(u) > 0:
        raise PreconditionViolated("direction must be nonzero")
    if not critical_cone_member(p, u):
        raise PreconditionViolated("direction is not critical")
    return u


def certify_direction_geometric(p: ProblemInstance, u, strategy=LPSearch(), exact: bool = False):
    """Certificate for a single critical direction of a set-constrained problem.

    Returns a :class:`DirectionCertificate` or :class:`NotFound`.
    """
    if p.kind in (ProblemKind.COMPOSITE, ProblemKind.STRUCTURED):
        raise PreconditionViolated(f"use the {p.kind.value} certifier")
    u = _check_direction(p, u)
    if isinstance(strategy, FixedMultiplier):
        return _candidate_direction(p, u, [(strategy.alpha, strategy.lam)], ["fixed multiplier"])
    if isinstance(strategy, SuppliedList):
        return _candidate_direction(p, u, list(strategy.pairs), ["supplied multipliers"])
    if lp_representable(p.C):
        return _lp_direction(p, u, exact)
    return _candidate_direction(p, u, _candidate_pairs(p), ["multiplier space sampling"])


def _composite_direction(p, u, exact=False):
    u = _check_direction(p, u)
    try:
        return _lp_direction(p, u, exact)
    except Unsupported:
        return _candidate_direction(p, u, _candidate_pairs(p), ["multiplier space sampling with alpha = 1"])


# Structured problems.


def curvature_theta(z, w, ys, eta, G, H, D) -> float:
    """``<eta, G''(z)(w,w)> - <ys, H''(z)(w,w)> + d2 delta_D(G(z); eta)(G'(z) w)``."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    eta = np.asarray(eta, dtype=float)
    ys = np.asarray(ys, dtype=float)
    g2 = np.einsum("kij,i,j->k", G.hessian(z), w, w)
    h2 = np.einsum("kij,i,j->k", H.hessian(z), w, w)
    dD = d2_indicator(D, G.value(z), eta, G.jacobian(z) @ w)
    return extreal_sum(float(eta @ g2 - ys @ h2), dD.value)


def _lifts(p, z, v):
    """Candidate lifts ``w`` of ``v`` at ``z`` and whether they are all of them."""
    Hz = p.H.jacobian(z)
    w0, *_ = np.linalg.lstsq(Hz, v, rcond=None)
    if np.linalg.norm(Hz @ w0 - v) > 1e-9 * (1 + np.linalg.norm(v)):
        return [], True
    N = scipy.linalg.null_space(Hz)
    if N.shape[1] == 0:
        return [w0], True
    lifts = [w0] + [w0 + s * N[:, k] for k in range(N.shape[1]) for s in (1, -1)]
    w_t = structured_lift(p, z, v)
    if w_t is not None:
        lifts.insert(0, w_t)
    return lifts, False


def _structured_direction(p: ProblemInstance, u, exact=False):
    u = _check_direction(p, u)
    v = p.jac @ u
    pairs, exhaustive, skipped = [], True, 0
    for z in p.phi_candidates:
        lifts, complete = _lifts(p, z, v)
        exhaustive &= complete
        for w in lifts:
            if tangent_member(p.D, p.G.value(z), p.G.jacobian(z) @ w):
                pairs.append((z, w))
            else:
                skipped += 1
    rules = ["stationarity of the Lagrangian", "all candidate pairs (z, w) must pass"]
    if not pairs:
        return NotFound(u, "no tangent lift found", rules)
    if not lp_representable(p.D):
        return NotFound(u, "no linear multiplier description of D", rules)
    lp, a, lam = _base_lp(p, exact)
    q0, q = p.quad_terms(u)
    etas, blocks = [], []
    for z, w in pairs:
        Gz, Hz = p.G.jacobian(z), p.H.jacobian(z)
        eta = lp.add_vars(p.G.dim_out, "eta")
        for j in range(Gz.shape[1]):
            terms = {}
            for i, ev in enumerate(eta):
                c = to_fraction(Gz[i, j], exact)
                if c:
                    terms[ev] = c
            for k, lv in enumerate(lam):
                c = to_fraction(Hz[k, j], exact)
                if c:
                    terms[lv] = terms.get(lv, 0) - c
            lp.add_eq(terms, 0)
        vz = Gz @ w
        terms = add_normal_block(lp, p.D, p.G.value(z), vz, eta, exact)
        g2 = np.einsum("kij,i,j->k", p.G.hessian(z), w, w)
        h2 = np.einsum("kij,i,j->k", p.H.hessian(z), w, w)
        extra = dict(zip(eta, g2))
        row = _value_row(a, lam, q0, q - h2, _curv_coeffs(terms, vz), exact, extra)
        lp.add_ge(row, 1)
        etas.append(eta)
        blocks.append(terms)
    rules += sorted({r for b in blocks for r in b.rules}) + ["strictness by homogeneity: value >= 1"]
    point = _solve(lp)
    if point is None:
        return NotFound(u, "multiplier LP infeasible for some candidate pair", rules)
    alpha = float(point[a])
    lam_val = np.array([float(point[lv]) for lv in lam])
    s = _normalize(alpha, lam_val)
    alpha, lam_val = alpha * s, lam_val * s
    base = p.lagrangian_curvature(u, alpha, lam_val)
    records, values = [], []
    for (z, w), eta in zip(pairs, etas):
        eta_val = s * np.array([float(point[ev]) for ev in eta])
        theta = curvature_theta(z, w, lam_val, eta_val, p.G, p.H, p.D)
        check = proximal_normal_member(p.D, p.G.value(z), p.G.jacobian(z) @ w, eta_val, "normal")
        if check is Ternary.NO:
            return NotFound(u, "inner multiplier fails the proximal normal check", rules)
        total = extreal_sum(base, theta)
        values.append(total)
        records.append({"z": z, "w": w, "eta": eta_val, "theta": theta, "value": total, "proximal_normal": check})
    vmin = min(values)
    if not vmin > MARGIN:
        return NotFound(u, f"engine recheck gives {vmin:.6g}", rules)
    notes = ["candidate points z are user-declared; completeness is not verified"]
    if not exhaustive:
        notes.append("lifts w were sampled, not enumerated")
    if skipped:
        notes.append(f"{skipped} non-tangent lifts pass trivially")
    return DirectionCertificate(
        u=u,
        alpha=alpha,
        lam=lam_val,
        value=float(vmin),
        curvature_term=float(vmin - base),
        rule_trace=rules + [f"note: {n}" for n in notes],
        multiplier_checks={"stationarity_residual": p.stationarity_residual(alpha, lam_val)},
        normalized_value=float(vmin) / (alpha + float(np.linalg.norm(lam_val))),
        extras={"pairs": records, "lifts_exhaustive": exhaustive},
    )


# Aggregation.


def _per_direction(p: ProblemInstance, exact: bool):
    if p.kind is ProblemKind.STRUCTURED:
        return lambda u: _structured_direction(p, u, exact)
    if p.kind is ProblemKind.COMPOSITE:
        return lambda u: _composite_direction(p, u, exact)
    return lambda u: certify_direction_geometric(p, u, LPSearch(), exact)


def _run_all(fn, dirs):
    workers = max(1, int(os.environ.get("CURVKIT_THREADS", "1") or 1))
    if workers == 1 or len(dirs) < 2:
        return [fn(u) for u in dirs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, dirs))


def _canonical(u):
    u = np.asarray(u, dtype=float)
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    return u if not len(nz) or u[nz[0]] > 0 else -u


def _witness(results):
    failing = [r.u for r in results if isinstance(r, NotFound)]
    if not failing:
        return None
    # Prefer a direction whose first nonzero entry is positive, for stable reports.
    for u in failing:
        if np.allclose(_canonical(u), u):
            return u
    return failing[0]


def _aggregate(results, mode, notes):
    if any(isinstance(r, NotFound) for r in results):
        return Certificate(Verdict.NOT_CERTIFIED, results, mode, _witness(results), notes)
    return Certificate(Verdict.CERTIFIED_ON_DIRECTIONS, results, mode, None, notes)


def _vacuous(mode, notes):
    return Certificate(
        Verdict.CERTIFIED_SUBSPACE_EXACT,
        [],
        mode,
        None,
        notes + ["critical cone is {0}: the condition holds vacuously"],
        {"dimension": 0, "vacuous": True},
    )


def _quadratic_form(p, alpha, lam, point, terms, B):
    """Reduced matrix of the certified quadratic form on ``range(B)``."""

    def form(u):
        v = p.jac @ u
        extra = sum(float(point[var]) * fn(v[sl]) for var, sl, fn in terms.curvature)
        return p.lagrangian_curvature(u, alpha, lam) + extra

    d = B.shape[1]
    M = np.zeros((d, d))
    for i in range(d):
        M[i, i] = form(B[:, i])
    for i in range(d):
        for j in range(i + 1, d):
            M[i, j] = M[j, i] = 0.5 * (form(B[:, i] + B[:, j]) - M[i, i] - M[j, j])
    return M


def _subspace_lp(p, B, exact, pairs: bool):
    composite = p.kind is ProblemKind.COMPOSITE
    lp, a, lam = _base_lp(p, exact, alpha_min=1 if composite else 0)
    zero = np.zeros(p.m)
    if composite:
        terms = _composite_block(lp, p.g, p.y, zero, lam, a, exact)
    else:
        terms = add_normal_block(lp, p.C, p.y, zero, lam, exact, apex_rays=p.apex_rays)
    dirs = [B[:, i] for i in range(B.shape[1])]
    if pairs:
        dirs += [B[:, i] + s * B[:, j] for i in range(B.shape[1]) for j in range(i + 1, B.shape[1]) for s in (1, -1)]
    for u in dirs:
        q0, q = p.quad_terms(u)
        lp.add_ge(_value_row(a, lam, q0, q, _curv_coeffs(terms, p.jac @ u), exact), 1)
    point = _solve(lp)
    if point is None:
        return None
    alpha = float(point[a])
    lam_val = np.array([float(point[lv]) for lv in lam])
    s = _normalize(alpha, lam_val)
    scaled = {var: float(point[var]) * s for var, _, _ in terms.curvature}
    return alpha * s, lam_val * s, scaled, terms


def _certify_subspace(p, B, exact, mode, notes):
    if B.shape[1] == 0:
        return _vacuous(mode, notes)
    attempts = []
    for pairs in (False, True):
        found = _subspace_lp(p, B, exact, pairs)
        if found is None:
            if not pairs:
                break
            continue
        alpha, lam, point, terms = found
        M = _quadratic_form(p, alpha, lam, point, terms, B)
        evals, evecs = np.linalg.eigh(M)
        attempts.append((evals, evecs))
        if evals[0] > MARGIN:
            u_gen = B @ np.linspace(1.0, 2.0, B.shape[1])
            v_gen = p.jac @ u_gen
            check = Ternary.UNKNOWN if p.kind is ProblemKind.COMPOSITE else proximal_normal_member(p.C, p.y, v_gen, lam, "normal")
            if check is Ternary.NO:
                continue
            info = {
                "dimension": B.shape[1],
                "basis": B.T,
                "alpha": alpha,
                "lambda": lam,
                "reduced_matrix": M,
                "min_eigenvalue": float(evals[0]),
                "normalized_min_eigenvalue": float(evals[0]) / (alpha + float(np.linalg.norm(lam))),
                "proximal_normal_generic": check,
                "rule_trace": ["critical cone proven to be a subspace by exact LPs"]
                + terms.rules
                + ["single multiplier for the whole subspace", "reduced form positive definite"],
            }
            return Certificate(Verdict.CERTIFIED_SUBSPACE_EXACT, [], mode, None, notes, info)
    # No shared multiplier works; look for a concrete failing direction.
    probe = [B[:, i] for i in range(B.shape[1])] + [B @ ev[:, 0] for _, ev in attempts]
    fn = _per_direction(p, exact)
    results = _run_all(fn, [_canonical(u) / np.linalg.norm(u) for u in probe])
    if any(isinstance(r, NotFound) for r in results):
        return Certificate(Verdict.NOT_CERTIFIED, results, mode, _witness(results), notes)
    return Certificate(
        Verdict.INCONCLUSIVE, results, mode, None, notes + ["no single multiplier makes the reduced form positive definite"]
    )


def _pre_checks(p: ProblemInstance):
    notes = []
    if p.kind is ProblemKind.STRUCTURED:
        if not (p.inner_semicompact and p.inner_calm_star):
            raise AssumptionNotDeclared("structured certification needs inner semicompactness and inner calmness*")
        if not p.phi_candidates:
            raise MissingCandidates("no candidate points supplied")
        notes.append("candidate point list completeness is the user's responsibility")
    return notes


def certify(p: ProblemInstance, mode=None, exact: bool = False) -> Certificate:
    """Aggregate per-direction certification over the critical cone.

    ``mode`` is :class:`SubspaceExact`, :class:`SampledSphere`,
    :class:`DirectionsList`, :class:`Auto` (the default) or a mode string.
    """
    if mode is None:
        mode = Auto()
    if isinstance(mode, str):
        mode = parse_mode(mode)
    elif isinstance(mode, (list, tuple)):
        mode = DirectionsList(tuple(tuple(float(t) for t in np.atleast_1d(u)) for u in mode))
    notes = _pre_checks(p)
    fn = _per_direction(p, exact)
    meta = {"exact": exact}
    if isinstance(mode, DirectionsList):
        meta.update(mode="directions", count=len(mode.directions), exhaustive=False)
        dirs, skipped = [], []
        for u in mode.directions:
            u = np.asarray(u, dtype=float)
            (dirs if np.linalg.norm(u) > 0 and critical_cone_member(p, u) else skipped).append(u)
        if skipped:
            notes.append(f"{len(skipped)} supplied directions are not critical and were skipped")
        if not dirs:
            return Certificate(Verdict.INCONCLUSIVE, [], meta, None, notes + ["no critical directions supplied"])
        return _aggregate(_run_all(fn, dirs), meta, notes)
    pieces = critical_pieces(p)
    if isinstance(mode, (SubspaceExact, Auto)):
        B = critical_subspace(p, pieces) if p.kind is not ProblemKind.STRUCTURED else None
        if B is not None:
            meta.update(mode="subspace", exhaustive=True)
            return _certify_subspace(p, B, exact, meta, notes)
        if isinstance(mode, SubspaceExact):
            meta.update(mode="subspace", exhaustive=False)
            return Certificate(Verdict.INCONCLUSIVE, [], meta, None, notes + ["critical cone not proven to be a subspace"])
        mode = SampledSphere(mode.n, mode.seed)
    meta.update(mode="sphere", count=mode.n, seed=mode.seed, exhaustive=False)
    if pieces is not None and all(pc.is_zero() for pc in pieces):
        return _vacuous(meta, notes)
    dirs, how = sample_critical_directions(p, mode.n, mode.seed, pieces)
    meta["sampling"] = how
    if not len(dirs):
        return Certificate(Verdict.INCONCLUSIVE, [], meta, None, notes + ["no critical directions found by sampling"])
    return _aggregate(_run_all(fn, list(dirs)), meta, notes)


def _require(p, kind):
    if p.kind is not kind:
        raise PreconditionViolated(f"expected a {kind.value} problem, got {p.kind.value}")


def certify_disjunctive(p: ProblemInstance, direction_source=None, exact: bool = False) -> Certificate:
    _require(p, ProblemKind.DISJUNCTIVE)
    return certify(p, direction_source, exact)


def certify_socp(p: ProblemInstance, direction_source=None, exact: bool = False) -> Certificate:
    _require(p, ProblemKind.SOCP)
    return certify(p, direction_source, exact)


def certify_structured(p: ProblemInstance, direction_source=None, exact: bool = False) -> Certificate:
    _require(p, ProblemKind.STRUCTURED)
    return certify(p, direction_source, exact)


def certify_composite(p: ProblemInstance, direction_source=None, exact: bool = False) -> Certificate:
    """Composite certification with the objective multiplier fixed to one."""
    _require(p, ProblemKind.COMPOSITE)
    return certify(p, direction_source, exact)
