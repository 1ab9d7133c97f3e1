"""Pointwise values of function expressions."""

from __future__ import annotations

import numpy as np

from curvkit.errors import Unsupported
from curvkit.sets.geometry import member
from curvkit.sets.projection import dist_many
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

# Sampled points must be feasible up to rounding, not up to the cone-query tolerance.
MEMBER_TOL = 1e-12


def value_many(h: FunctionExpr, Z) -> np.ndarray:
    """Values of ``h`` at each row of ``Z`` (``+inf`` outside the domain)."""
    Z = np.asarray(Z, dtype=float).reshape(-1, h.dim)
    if isinstance(h, Smooth):
        return h.f.value_many(Z)[:, 0]
    if isinstance(h, Indicator):
        return np.array([0.0 if member(h.S, z, MEMBER_TOL) else np.inf for z in Z])
    if isinstance(h, EuclNorm):
        return np.linalg.norm(Z, axis=1)
    if isinstance(h, VecMax):
        return Z.max(axis=1)
    if isinstance(h, L0):
        return np.count_nonzero(Z, axis=1).astype(float)
    if isinstance(h, Dist):
        return dist_many(h.S, Z)
    if isinstance(h, SumSmooth):
        return h.f0.value_many(Z)[:, 0] + value_many(h.rest, Z)
    if isinstance(h, SeparableSum):
        return sum(value_many(p, Z[:, sl]) for p, sl in zip(h.parts, h.slices))
    if isinstance(h, Scaled):
        return h.alpha * value_many(h.h, Z)
    if isinstance(h, Compose):
        return value_many(h.g, h.F.value_many(Z))
    if isinstance(h, MarginalFinite):
        if h.value_fn is None:
            raise Unsupported("marginal functions need an explicit value_fn to be evaluated")
        return np.array([float(h.value_fn(z)) for z in Z])
    raise Unsupported(f"evaluation of {type(h).__name__}")


def value(h: FunctionExpr, z) -> float:
    return float(value_many(h, np.asarray(z, dtype=float)[None])[0])
