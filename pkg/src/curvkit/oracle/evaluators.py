"""Vectorized function evaluators for the sampling oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from curvkit.core.smooth import SmoothMap
from curvkit.sets.atoms import ClosedSet, PreImage, projectable
from curvkit.sets.projection import project_many
from curvkit.subderiv.evaluate import value_many
from curvkit.subderiv.expr import Compose, FunctionExpr, Indicator, Scaled, SeparableSum, SumSmooth

RETRACTION_STEPS = 30


@dataclass(frozen=True, eq=False)
class Evaluator:
    """``fn`` maps a ``(k, dim)`` array to ``k`` extended reals.

    ``project`` optionally maps points to nearby points of the domain; it is
    used to recover feasibility for indicator-like functions. ``constrained``
    marks functions with a proper domain, for which rejection sampling gets
    a larger budget.
    """

    dim: int
    fn: Callable
    project: Callable | None = None
    constrained: bool = False

    def __call__(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float).reshape(-1, self.dim)
        return np.asarray(self.fn(Z), dtype=float).reshape(len(Z))


def _has_indicator(h: FunctionExpr) -> bool:
    if isinstance(h, Indicator):
        return True
    if isinstance(h, SeparableSum):
        return any(_has_indicator(p) for p in h.parts)
    if isinstance(h, (Scaled,)):
        return _has_indicator(h.h)
    if isinstance(h, SumSmooth):
        return _has_indicator(h.rest)
    if isinstance(h, Compose):
        return _has_indicator(h.g)
    return False


def preimage_retraction(F: SmoothMap, C: ClosedSet, steps: int = RETRACTION_STEPS) -> Callable:
    """Gauss-Newton pull of points toward ``F^{-1}(C)``."""

    def retract(X):
        X = np.array(X, dtype=float).reshape(-1, F.dim_in)
        for i in range(len(X)):
            x = X[i]
            for _ in range(steps):
                Fx = F.value(x)
                gap = Fx - project_many(C, Fx[None])[0]
                if np.linalg.norm(gap) <= 1e-15 * (1.0 + np.linalg.norm(Fx)):
                    break
                step, *_ = np.linalg.lstsq(F.jacobian(x), gap, rcond=None)
                x = x - step
            X[i] = x
        return X

    return retract


def set_projector(S: ClosedSet) -> Callable | None:
    if projectable(S):
        return lambda X: project_many(S, X)
    if isinstance(S, PreImage) and projectable(S.inner):
        return preimage_retraction(S.F, S.inner)
    return None


def from_expr(h: FunctionExpr) -> Evaluator:
    proj = set_projector(h.S) if isinstance(h, Indicator) else None
    return Evaluator(h.dim, lambda Z: value_many(h, Z), proj, _has_indicator(h))


def from_callable(fn: Callable, dim: int, vectorized: bool = True, project=None, constrained=False) -> Evaluator:
    if vectorized:
        return Evaluator(dim, fn, project, constrained)
    return Evaluator(dim, lambda Z: np.array([float(fn(z)) for z in Z]), project, constrained)


def as_evaluator(h, dim: int | None = None) -> Evaluator:
    if isinstance(h, Evaluator):
        return h
    if isinstance(h, FunctionExpr):
        return from_expr(h)
    if callable(h):
        if dim is None:
            raise ValueError("dimension is required for a plain callable")
        return from_callable(h, dim)
    raise TypeError(f"cannot evaluate {type(h).__name__}")
