"""Optimization problem instances with their base-point data."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from curvkit.core.smooth import SmoothMap
from curvkit.errors import DimensionMismatch, InfeasibleBasePoint, MissingCandidates
from curvkit.sets.atoms import ClosedSet, Image, PolyhedralUnion, PreImage, Product, SecondOrderCone
from curvkit.sets.geometry import member
from curvkit.subderiv.evaluate import value as expr_value
from curvkit.subderiv.expr import FunctionExpr

FEAS_TOL = 1e-9


class ProblemKind(Enum):
    GEOMETRIC = "geometric"
    DISJUNCTIVE = "disjunctive"
    SOCP = "socp"
    STRUCTURED = "structured"
    COMPOSITE = "composite"


def soc_blocks(C: ClosedSet) -> list[SecondOrderCone]:
    """The cone blocks of a second-order cone program's constraint set."""
    if isinstance(C, SecondOrderCone):
        return [C]
    if isinstance(C, Product) and all(isinstance(f, SecondOrderCone) for f in C.factors):
        return list(C.factors)
    raise DimensionMismatch("an SOCP constraint set must be a product of second-order cones")


@dataclass(eq=False)
class ProblemInstance:
    """``min f0(x)`` subject to ``F(x) in C``, or ``min f0(x) + g(F(x))``.

    Structured instances describe ``C = H(G^{-1}(D))``; ``phi_candidates``
    lists the known points ``z`` with ``G(z) in D`` and ``H(z) = F(x)``.
    Their completeness and the two assumption flags are declarations by the
    user and are not checked. ``apex_rays`` are extra normal rays offered to
    second-order cone blocks whose base point is the apex.
    """

    kind: ProblemKind
    f0: SmoothMap
    F: SmoothMap
    x: np.ndarray
    C: ClosedSet | None = None
    g: FunctionExpr | None = None
    H: SmoothMap | None = None
    G: SmoothMap | None = None
    D: ClosedSet | None = None
    phi_candidates: tuple = ()
    inner_semicompact: bool = False
    inner_calm_star: bool = False
    apex_rays: tuple = ()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = ProblemKind(self.kind)
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        n = len(self.x)
        if self.f0.dim_out != 1 or self.f0.dim_in != n or self.F.dim_in != n:
            raise DimensionMismatch("objective, map and base point disagree on dimension")
        if self.kind is ProblemKind.COMPOSITE:
            self._validate_composite()
        elif self.kind is ProblemKind.STRUCTURED:
            self._validate_structured()
        else:
            self._validate_constrained()
        self.phi_candidates = tuple(np.asarray(z, dtype=float) for z in self.phi_candidates)
        self.apex_rays = tuple(np.asarray(r, dtype=float) for r in self.apex_rays)

    def _validate_constrained(self):
        if self.C is None:
            raise DimensionMismatch(f"{self.kind.value} problems need a constraint set")
        if self.C.dim != self.F.dim_out:
            raise DimensionMismatch("constraint set and map output disagree on dimension")
        if self.kind is ProblemKind.SOCP:
            soc_blocks(self.C)
        if self.kind is ProblemKind.DISJUNCTIVE and not isinstance(self.C, PolyhedralUnion):
            raise DimensionMismatch("a disjunctive problem needs a polyhedral union")
        if not member(self.C, self.y, FEAS_TOL):
            raise InfeasibleBasePoint("F(x) is not in the constraint set")

    def _validate_composite(self):
        if self.g is None:
            raise DimensionMismatch("composite problems need an outer function g")
        if self.g.dim != self.F.dim_out:
            raise DimensionMismatch("outer function and map output disagree on dimension")
        if not np.isfinite(expr_value(self.g, self.y)):
            raise InfeasibleBasePoint("g(F(x)) is not finite")

    def _validate_structured(self):
        H, G, D = self.H, self.G, self.D
        if H is None or G is None or D is None:
            raise DimensionMismatch("structured problems need H, G and D")
        if H.dim_out != self.F.dim_out or G.dim_in != H.dim_in or G.dim_out != D.dim:
            raise DimensionMismatch("structured maps disagree on dimension")
        if not self.phi_candidates:
            raise MissingCandidates("structured problems need candidate points z with H(z) = F(x)")
        y = self.y
        for z in self.phi_candidates:
            z = np.asarray(z, dtype=float)
            if not member(D, G.value(z), FEAS_TOL):
                raise InfeasibleBasePoint(f"G(z) is not in D for candidate {z.tolist()}")
            if np.linalg.norm(H.value(z) - y) > FEAS_TOL * (1.0 + np.linalg.norm(y)):
                raise InfeasibleBasePoint(f"H(z) differs from F(x) for candidate {z.tolist()}")
        if self.C is None:
            self.C = Image(
                H,
                PreImage(G, D),
                ((tuple(y), tuple(tuple(z) for z in self.phi_candidates)),),
                self.inner_semicompact,
                self.inner_calm_star,
            )

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return self.F.dim_out

    @cached_property
    def y(self) -> np.ndarray:
        return self.F.value(self.x)

    @cached_property
    def jac(self) -> np.ndarray:
        return self.F.jacobian(self.x)

    @cached_property
    def grad0(self) -> np.ndarray:
        return self.f0.gradient(self.x)

    @cached_property
    def hess0(self) -> np.ndarray:
        return self.f0.hessian(self.x)[0]

    @cached_property
    def hessF(self) -> np.ndarray:
        return self.F.hessian(self.x)

    def quad_terms(self, u) -> tuple[float, np.ndarray]:
        """``u^T hess f0 u`` and the vector of ``u^T hess F_k u``."""
        u = np.asarray(u, dtype=float)
        return float(u @ self.hess0 @ u), np.einsum("kij,i,j->k", self.hessF, u, u)

    def lagrangian_curvature(self, u, alpha: float, lam) -> float:
        q0, q = self.quad_terms(u)
        return float(alpha * q0 + np.dot(lam, q))

    def stationarity_residual(self, alpha: float, lam) -> float:
        return float(np.linalg.norm(alpha * self.grad0 + self.jac.T @ np.asarray(lam, dtype=float)))
