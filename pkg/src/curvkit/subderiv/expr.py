"""Expression trees of nonsmooth functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from curvkit.core.smooth import AffineMap, SmoothMap
from curvkit.errors import DimensionMismatch, MissingCandidates
from curvkit.sets.atoms import ClosedSet


class FunctionExpr:
    """Base class; ``dim`` is the input dimension."""

    dim: int


@dataclass(frozen=True, eq=False)
class Smooth(FunctionExpr):
    f: SmoothMap

    def __post_init__(self):
        if self.f.dim_out != 1:
            raise DimensionMismatch("Smooth needs a scalar map")

    @property
    def dim(self):
        return self.f.dim_in


@dataclass(frozen=True, eq=False)
class Indicator(FunctionExpr):
    S: ClosedSet

    @property
    def dim(self):
        return self.S.dim


@dataclass(frozen=True)
class EuclNorm(FunctionExpr):
    n: int

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class VecMax(FunctionExpr):
    """Largest component, ``max_i z_i``."""

    n: int

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True)
class L0(FunctionExpr):
    """Number of nonzero components."""

    n: int

    @property
    def dim(self):
        return self.n


@dataclass(frozen=True, eq=False)
class Dist(FunctionExpr):
    S: ClosedSet

    @property
    def dim(self):
        return self.S.dim


@dataclass(frozen=True, eq=False)
class SumSmooth(FunctionExpr):
    """``f0 + rest`` with ``f0`` smooth."""

    f0: SmoothMap
    rest: FunctionExpr

    def __post_init__(self):
        if self.f0.dim_out != 1 or self.f0.dim_in != self.rest.dim:
            raise DimensionMismatch("SumSmooth parts disagree on dimension")

    @property
    def dim(self):
        return self.rest.dim


@dataclass(frozen=True, eq=False)
class SeparableSum(FunctionExpr):
    """``sum_i h_i(z_i)`` over consecutive blocks of the input."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("SeparableSum needs at least one block")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for p in self.parts:
            out.append(slice(start, start + p.dim))
            start += p.dim
        return out

    def split(self, z) -> list[np.ndarray]:
        z = np.asarray(z, dtype=float)
        return [z[s] for s in self.slices]


@dataclass(frozen=True, eq=False)
class Compose(FunctionExpr):
    """``g(F(x))``."""

    g: FunctionExpr
    F: SmoothMap

    def __post_init__(self):
        if self.F.dim_out != self.g.dim:
            raise DimensionMismatch("inner map output does not match the outer function")

    @property
    def dim(self):
        return self.F.dim_in


@dataclass(frozen=True, eq=False)
class Scaled(FunctionExpr):
    """``alpha * h`` for ``alpha > 0``."""

    alpha: float
    h: FunctionExpr

    def __post_init__(self):
        if not float(self.alpha) > 0:
            raise ValueError("scaling factor must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def dim(self):
        return self.h.dim


@dataclass(frozen=True, eq=False)
class MarginalFinite(FunctionExpr):
    """``x -> inf_y phi(x, y)`` known through explicit minimizer lists.

    ``candidates`` is a sequence of ``(x, [y, ...])`` pairs. ``directions``
    optionally maps ``(x, y, u)`` to a list of ``v`` used in the infimum over
    lifted directions; the default grid is ``v = 0`` and the signed unit
    vectors. ``value_fn`` supplies ``h`` itself when it is known in closed
    form (only the sampling oracle needs it).
    """

    phi: FunctionExpr
    dim_x: int
    candidates: tuple = ()
    inner_calm_star: bool = False
    directions: Callable | None = None
    value_fn: Callable | None = None

    def __post_init__(self):
        if self.dim_x >= self.phi.dim:
            raise DimensionMismatch("marginal variable leaves no room for y")
        cands = tuple(
            (tuple(float(v) for v in np.atleast_1d(x)), tuple(tuple(float(v) for v in np.atleast_1d(y)) for y in ys))
            for x, ys in self.candidates
        )
        object.__setattr__(self, "candidates", cands)

    @property
    def dim(self):
        return self.dim_x

    @property
    def dim_y(self):
        return self.phi.dim - self.dim_x

    def minimizers_at(self, x, tol: float = 1e-9) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        for point, ys in self.candidates:
            if np.max(np.abs(np.asarray(point) - x), initial=0.0) <= tol * (1 + np.max(np.abs(x), initial=0.0)):
                if not ys:
                    break
                return [np.asarray(y, dtype=float) for y in ys]
        raise MissingCandidates(f"no minimizer candidates supplied for {x.tolist()}")

    def direction_grid(self, x, y, u) -> list[np.ndarray]:
        if self.directions is not None:
            return [np.asarray(v, dtype=float) for v in self.directions(x, y, u)]
        m = self.dim_y
        grid = [np.zeros(m)]
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            grid += [e, -e]
        return grid


def expr_sum(h1: FunctionExpr, h2: FunctionExpr) -> FunctionExpr:
    """``h1 + h2`` on a shared input, as a separable sum after duplication."""
    if h1.dim != h2.dim:
        raise DimensionMismatch("summands disagree on dimension")
    n = h1.dim
    dup = AffineMap(np.vstack([np.eye(n), np.eye(n)]))
    return Compose(SeparableSum((h1, h2)), dup)


LIPSCHITZ_ATOMS = (Smooth, EuclNorm, VecMax, Dist)


def is_lipschitz(h: FunctionExpr) -> bool:
    """Locally Lipschitz expressions, for which the first-order chain rule is an equality."""
    if isinstance(h, LIPSCHITZ_ATOMS):
        return True
    if isinstance(h, (SeparableSum,)):
        return all(is_lipschitz(p) for p in h.parts)
    if isinstance(h, Scaled):
        return is_lipschitz(h.h)
    if isinstance(h, SumSmooth):
        return is_lipschitz(h.rest)
    if isinstance(h, Compose):
        return is_lipschitz(h.g)
    return False
