"""Critical cones: membership, polyhedral descriptions and direction sampling."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian

import numpy as np
import scipy.linalg
from scipy.stats import norm, qmc

from curvkit.errors import InfeasibleBase, Unsupported
from curvkit.lp import RationalLP, lp_feasible
from curvkit.sets import soc
from curvkit.sets.atoms import ACTIVE_TOL, Box, ClosedSet, Polyhedron, PolyhedralUnion, Product, SecondOrderCone
from curvkit.sets.geometry import active_branches, box_as_polyhedron, tangent_member
from curvkit.sets.projection import project_many
from curvkit.subderiv.expr import Indicator, L0, SeparableSum, Smooth
from curvkit.subderiv.first import subderivative

from curvkit.sosc.problem import ProblemKind

SLOPE_TOL = 1e-9
ZERO_DIR = 1e-9


@dataclass(frozen=True)
class ConePiece:
    """``{P z : A z <= 0, E z = 0}`` in the space of directions ``u``.

    ``P`` is the identity unless the cone is the shadow of a lifted cone, as
    for structured problems where the lifted variable is ``(u, w)``.
    """

    A: np.ndarray
    E: np.ndarray
    P: np.ndarray

    @property
    def lifted(self) -> bool:
        return self.P.shape[0] != self.P.shape[1] or not np.array_equal(self.P, np.eye(self.P.shape[0]))

    def _lp(self):
        lp = RationalLP()
        z = lp.add_vars(self.P.shape[1], "z")
        for row in self.A:
            lp.add_le(dict(zip(z, row)), 0)
        for row in self.E:
            lp.add_eq(dict(zip(z, row)), 0)
        return lp, z

    def feasible_with(self, row, lower: float) -> bool:
        """Whether some point of the lifted cone has ``row @ z >= lower``."""
        lp, z = self._lp()
        lp.add_ge(dict(zip(z, row)), lower)
        return lp_feasible(lp).feasible

    def is_zero(self) -> bool:
        """Whether the cone in ``u`` space is ``{0}`` (decided by exact LPs)."""
        return not any(self.feasible_with(s * r, 1) for r in self.P for s in (1, -1))

    def subspace_basis(self) -> np.ndarray | None:
        """Orthonormal basis of the cone when it is a linear subspace, else None."""
        if self.lifted:
            return None
        if any(self.feasible_with(-row, 1) for row in self.A):
            return None
        M = np.vstack([self.A, self.E]) if len(self.A) or len(self.E) else np.zeros((0, self.P.shape[1]))
        return scipy.linalg.null_space(M) if len(M) else np.eye(self.P.shape[1])

    def within_subspace(self, basis: np.ndarray) -> bool:
        """Whether the cone lies in ``range(basis)``."""
        n = self.P.shape[0]
        comp = scipy.linalg.null_space(basis.T) if basis.shape[1] else np.eye(n)
        rows = comp.T @ self.P
        return not any(self.feasible_with(s * r, 1) for r in rows for s in (1, -1))

    def project(self, Z: np.ndarray) -> np.ndarray:
        k = self.P.shape[1]
        poly = Polyhedron(self.A, np.zeros(len(self.A)), self.E, np.zeros(len(self.E)), dim=k)
        return project_many(poly, Z)


def _rows(M, k):
    return np.asarray(M, dtype=float).reshape(-1, k)


def _tangent_halfspaces(S: ClosedSet, y, tol) -> list[tuple[np.ndarray, np.ndarray]] | None:
    """T_S(y) as a union of polyhedral cones ``{A v <= 0, E v = 0}``; None if not polyhedral."""
    y = np.asarray(y, dtype=float)
    d = S.dim
    if isinstance(S, Box):
        S = box_as_polyhedron(S)
    if isinstance(S, Polyhedron):
        I = S.active_set(y, tol)
        return [(_rows(S.A[I], d), _rows(S.E, d))]
    if isinstance(S, PolyhedralUnion):
        out = []
        for i in active_branches(S, y, tol):
            out += _tangent_halfspaces(S.branches[i], y, tol)
        return out
    if isinstance(S, SecondOrderCone):
        where = soc.location(y, tol)
        if where == "interior":
            return [(np.zeros((0, d)), np.zeros((0, d)))]
        if where == "boundary":
            return [(soc.q_vector(y)[None, :], np.zeros((0, d)))]
        if where == "apex":
            return None
        raise InfeasibleBase("base point outside the cone")
    if isinstance(S, Product):
        parts = []
        for f, sl in zip(S.factors, S.slices):
            sub = _tangent_halfspaces(f, y[sl], tol)
            if sub is None:
                return None
            parts.append((sl, sub))
        out = []
        for combo in cartesian(*[sub for _, sub in parts]):
            A_blocks, E_blocks = [], []
            for (sl, _), (A, E) in zip(parts, combo):
                for rows, acc in ((A, A_blocks), (E, E_blocks)):
                    full = np.zeros((len(rows), d))
                    full[:, sl] = rows
                    acc.append(full)
            out.append((np.vstack(A_blocks), np.vstack(E_blocks)))
        return out
    return None


def _l0_zero_set(y, tol=SLOPE_TOL) -> list[int]:
    return [i for i, yi in enumerate(np.asarray(y, dtype=float)) if abs(yi) <= tol]


def _composite_halfspaces(g, y, tol) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None:
    """Pieces ``(A, E, c)`` of ``{v : A v <= 0, E v = 0}`` with ``dg(y)(v) = c v`` there."""
    d = g.dim
    y = np.asarray(y, dtype=float)
    if isinstance(g, Smooth):
        return [(np.zeros((0, d)), np.zeros((0, d)), g.f.gradient(y))]
    if isinstance(g, L0):
        I0 = _l0_zero_set(y)
        return [(np.zeros((0, d)), np.eye(d)[I0], np.zeros(d))]
    if isinstance(g, Indicator):
        T = _tangent_halfspaces(g.S, y, ACTIVE_TOL)
        return None if T is None else [(A, E, np.zeros(d)) for A, E in T]
    if isinstance(g, SeparableSum):
        subs = []
        for part, sl in zip(g.parts, g.slices):
            sub = _composite_halfspaces(part, y[sl], tol)
            if sub is None:
                return None
            subs.append((sl, sub))
        out = []
        for combo in cartesian(*[sub for _, sub in subs]):
            A_b, E_b, c = [], [], np.zeros(d)
            for (sl, _), (A, E, ci) in zip(subs, combo):
                for rows, acc in ((A, A_b), (E, E_b)):
                    full = np.zeros((len(rows), d))
                    full[:, sl] = rows
                    acc.append(full)
                c[sl] = ci
            out.append((np.vstack(A_b), np.vstack(E_b), c))
        return out
    return None


def critical_pieces(p, tol: float = ACTIVE_TOL) -> list[ConePiece] | None:
    """The critical cone as a union of polyhedral pieces, or None if unavailable."""
    n = p.n
    J = p.jac
    eye = np.eye(n)
    if p.kind is ProblemKind.COMPOSITE:
        comp = _composite_halfspaces(p.g, p.y, tol)
        if comp is None:
            return None
        return [
            ConePiece(np.vstack([A @ J, (p.grad0 + c @ J)[None, :]]), E @ J, eye) for A, E, c in comp
        ]
    if p.kind is ProblemKind.STRUCTURED:
        return _structured_pieces(p, tol)
    T = _tangent_halfspaces(p.C, p.y, tol)
    if T is None:
        return None
    return [ConePiece(np.vstack([A @ J, p.grad0[None, :]]), E @ J, eye) for A, E in T]


def _structured_pieces(p, tol):
    n, ell = p.n, p.H.dim_in
    out = []
    for z in p.phi_candidates:
        T = _tangent_halfspaces(p.D, p.G.value(z), tol)
        if T is None:
            return None
        Gz, Hz = p.G.jacobian(z), p.H.jacobian(z)
        for A, E in T:
            A_l = np.vstack([np.hstack([np.zeros((len(A), n)), A @ Gz]), np.concatenate([p.grad0, np.zeros(ell)])[None]])
            E_l = np.vstack([np.hstack([np.zeros((len(E), n)), E @ Gz]), np.hstack([-p.jac, Hz])])
            out.append(ConePiece(A_l, E_l, np.hstack([np.eye(n), np.zeros((n, ell))])))
    return out


def structured_lift(p, z, v, tol: float = ACTIVE_TOL) -> np.ndarray | None:
    """Some ``w`` with ``grad H(z) w = v`` and ``grad G(z) w`` tangent to D at G(z)."""
    Gz, Hz, Gv = p.G.jacobian(z), p.H.jacobian(z), p.G.value(z)
    T = _tangent_halfspaces(p.D, Gv, tol)
    if T is not None:
        ell = Hz.shape[1]
        for A, E in T:
            lp = RationalLP()
            w = lp.add_vars(ell, "w")
            for row, rhs in zip(Hz, v):
                lp.add_eq(dict(zip(w, row)), rhs)
            for row in A @ Gz:
                lp.add_le(dict(zip(w, row)), 0)
            for row in E @ Gz:
                lp.add_eq(dict(zip(w, row)), 0)
            res = lp_feasible(lp)
            if res.feasible:
                return np.array([float(t) for t in res.point])
        return None
    w0, *_ = np.linalg.lstsq(Hz, v, rcond=None)
    if np.linalg.norm(Hz @ w0 - v) > 1e-9 * (1 + np.linalg.norm(v)):
        return None
    N = scipy.linalg.null_space(Hz)
    for w in [w0] + [w0 + s * N[:, k] for k in range(N.shape[1]) for s in (1, -1)]:
        if tangent_member(p.D, Gv, Gz @ w, tol):
            return w
    return None


def critical_cone_member(p, u, tol: float = ACTIVE_TOL) -> bool:
    """Whether ``u`` lies in the critical cone (an outer estimate for structured problems)."""
    u = np.asarray(u, dtype=float).reshape(p.n)
    v = p.jac @ u
    slope = float(p.grad0 @ u)
    stol = SLOPE_TOL * (1.0 + np.linalg.norm(p.grad0)) * (1.0 + np.linalg.norm(u))
    if p.kind is ProblemKind.COMPOSITE:
        dg = subderivative(p.g, p.y, v)
        total = slope + dg.value
        # A lower bound above zero excludes u; otherwise u is kept, which only
        # adds directions to certify.
        return not (dg.is_lower and total > stol)
    if slope > stol:
        return False
    if p.kind is ProblemKind.STRUCTURED:
        return any(structured_lift(p, z, v, tol) is not None for z in p.phi_candidates)
    return tangent_member(p.C, p.y, v, tol)


def sphere_points(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points pushed to the unit sphere through the normal quantile."""
    m = max(1, int(np.ceil(np.log2(max(count, 2)))))
    pts = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:count]
    pts = np.clip(pts, 1e-12, 1 - 1e-12)
    G = norm.ppf(pts)
    nrm = np.linalg.norm(G, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return G / nrm


def _unit_rows(U):
    nrm = np.linalg.norm(U, axis=1)
    keep = nrm > ZERO_DIR
    return U[keep] / nrm[keep, None]


def sample_critical_directions(p, count: int, seed: int, pieces=None, max_rounds: int = 8) -> tuple[np.ndarray, str]:
    """Quasi-uniform unit directions of the critical cone.

    Returns the directions and how they were produced: ``"pieces"`` when a
    polyhedral description was sampled, ``"rejection"`` otherwise.
    """
    n = p.n
    if pieces is None:
        pieces = critical_pieces(p)
    if pieces is not None:
        live = [pc for pc in pieces if not pc.is_zero()]
        if not live:
            return np.zeros((0, n)), "pieces"
        quota = [count // len(live) + (1 if k < count % len(live) else 0) for k in range(len(live))]
        out = []
        for k, (pc, q) in enumerate(zip(live, quota)):
            got = np.zeros((0, n))
            for r in range(max_rounds):
                Z = sphere_points(pc.P.shape[1], max(2 * q, 4) << r, seed + 7919 * k + 104729 * r)
                U = _unit_rows(pc.project(Z) @ pc.P.T)
                got = np.vstack([got, U])
                if len(got) >= q:
                    break
            out.append(got[:q])
        return np.vstack(out), "pieces"
    out = np.zeros((0, n))
    for r in range(max_rounds):
        Z = sphere_points(n, (4 * count) << r, seed + 104729 * r)
        keep = [u for u in Z if critical_cone_member(p, u)]
        if keep:
            out = np.vstack([out, keep])
        if len(out) >= count:
            break
    return out[:count], "rejection"


def critical_subspace(p, pieces=None) -> np.ndarray | None:
    """Orthonormal basis of the critical cone when it is proven to be a subspace."""
    if pieces is None:
        pieces = critical_pieces(p)
    if pieces is None:
        return None
    live = [pc for pc in pieces if not pc.is_zero()]
    if not live:
        return np.zeros((p.n, 0))
    for pc in live:
        B = pc.subspace_basis()
        if B is not None and all(other is pc or other.within_subspace(B) for other in live):
            return B
    return None


__all__ = [
    "ConePiece",
    "critical_cone_member",
    "critical_pieces",
    "critical_subspace",
    "sample_critical_directions",
    "sphere_points",
    "structured_lift",
]
