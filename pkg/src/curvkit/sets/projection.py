"""Euclidean projections onto the projectable atoms."""

from __future__ import annotations

import numpy as np

from curvkit.errors import InfeasibleBase, Unsupported
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
)

TIE_TOL = 1e-12


def _polyhedron_many(P: Polyhedron, X: np.ndarray) -> np.ndarray:
    # Enumerate linearly independent active sets; the KKT point of the correct
    # one is feasible with nonnegative inequality multipliers.
    k = len(X)
    best = np.full(k, np.inf)
    out = np.full_like(X, np.nan)
    n_eq = len(P.e)
    for S, R, r, Ginv in P._projection_pieces:
        if len(R):
            resid = X @ R.T - r
            mult = resid @ Ginv.T
            cand = X - mult @ R
            # One refinement step pulls rounding off the face.
            cand -= ((cand @ R.T - r) @ Ginv.T) @ R
            ok = (mult[:, n_eq:] >= -1e-10).all(axis=1) if len(S) else np.ones(k, bool)
        else:
            cand = X.copy()
            ok = np.ones(k, bool)
        if P.num_ineq:
            # The point itself is accepted only when exactly feasible; face
            # candidates may carry rounding error.
            viol = cand @ P.A.T - P.b
            slack = 0.0 if not len(S) else 1e-14 * (1.0 + np.abs(P.b) + np.abs(cand) @ np.abs(P.A).T)
            ok &= (viol <= slack).all(axis=1)
        d = np.linalg.norm(cand - X, axis=1)
        better = ok & (d < best - 1e-15)
        best[better] = d[better]
        out[better] = cand[better]
    if np.isnan(out).any():
        raise InfeasibleBase("projection onto an empty polyhedron")
    return out


def project_many(S: ClosedSet, X) -> np.ndarray:
    """Nearest points for each row of ``X`` (one branch chosen on ties)."""
    X = np.asarray(X, dtype=float).reshape(-1, S.dim)
    if isinstance(S, Box):
        return np.clip(X, S.lower, S.upper)
    if isinstance(S, SecondOrderCone):
        return soc.project_many(X)
    if isinstance(S, Polyhedron):
        return _polyhedron_many(S, X)
    if isinstance(S, Product):
        return np.hstack([project_many(f, X[:, sl]) for f, sl in zip(S.factors, S.slices)])
    if isinstance(S, PolyhedralUnion):
        cands = np.stack([project_many(b, X) for b in S.branches])
        d = np.linalg.norm(cands - X[None], axis=2)
        idx = np.argmin(d, axis=0)
        return cands[idx, np.arange(len(X))]
    if isinstance(S, (PreImage, Image)):
        raise Unsupported(f"projection onto {type(S).__name__} atoms is not available")
    raise Unsupported(f"projection onto {type(S).__name__}")


def dist_many(S: ClosedSet, X) -> np.ndarray:
    X = np.asarray(X, dtype=float).reshape(-1, S.dim)
    return np.linalg.norm(project_many(S, X) - X, axis=1)


def project(S: ClosedSet, x) -> list[np.ndarray]:
    """All nearest points of ``S`` to ``x``.

    Multi-valued only for unions, where every branch attaining the minimal
    distance (up to a relative 1e-12) contributes its projection.
    """
    x = atoms_dim_check(S, x)
    if isinstance(S, PolyhedralUnion):
        cands = [project_many(b, x[None])[0] for b in S.branches]
        d = np.array([np.linalg.norm(c - x) for c in cands])
        dmin = d.min()
        out = []
        for c, dc in zip(cands, d):
            if dc <= dmin + TIE_TOL * (1.0 + dmin) and not any(np.allclose(c, o, atol=1e-12) for o in out):
                out.append(c)
        return out
    if isinstance(S, Product) and any(isinstance(f, (PolyhedralUnion, Product)) for f in S.factors):
        from itertools import product as cartesian

        parts = [project(f, x[sl]) for f, sl in zip(S.factors, S.slices)]
        return [np.concatenate(combo) for combo in cartesian(*parts)]
    return [project_many(S, x[None])[0]]


def dist(S: ClosedSet, x) -> float:
    return float(dist_many(S, np.asarray(x, dtype=float)[None])[0])
