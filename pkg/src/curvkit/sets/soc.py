"""Second-order cone helpers shared by the geometry and calculus code."""

from __future__ import annotations

import numpy as np

SOC_TOL = 1e-9


def bar(y) -> np.ndarray:
    """All but the first coordinate."""
    return np.asarray(y, dtype=float)[1:]


def tail_norm(y) -> float:
    return float(np.linalg.norm(bar(y)))


def tail_inner(y, v) -> float:
    """Inner product of the tails, ``sum_{i>=2} y_i v_i``."""
    return float(np.dot(bar(y), bar(v)))


def location(y, tol: float = SOC_TOL) -> str:
    """``"apex"``, ``"interior"``, ``"boundary"`` or ``"outside"``."""
    y = np.asarray(y, dtype=float)
    scale = 1.0 + abs(y[0])
    if np.linalg.norm(y) <= tol:
        return "apex"
    r = tail_norm(y)
    if r > y[0] + tol * scale:
        return "outside"
    if r < y[0] - tol * scale:
        return "interior"
    return "boundary"


def q_vector(y) -> np.ndarray:
    """Generator of the normal ray at a nonzero boundary point: ``(-1, y_bar/|y_bar|)``."""
    y = np.asarray(y, dtype=float)
    r = tail_norm(y)
    return np.concatenate([[-1.0], bar(y) / r])


def in_cone(v, tol: float = SOC_TOL) -> bool:
    v = np.asarray(v, dtype=float)
    return tail_norm(v) <= v[0] + tol * (1.0 + np.linalg.norm(v))


def project_many(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    t = Y[:, 0]
    r = np.linalg.norm(Y[:, 1:], axis=1)
    out = Y.copy()
    inside = r <= t
    polar = r <= -t
    mid = ~(inside | polar)
    out[polar] = 0.0
    if mid.any():
        scale = (t[mid] + r[mid]) / 2.0
        out[mid, 0] = scale
        out[mid, 1:] = Y[mid, 1:] * (scale / r[mid])[:, None]
    return out


def boundary_curvature(y, v) -> float:
    """``|v_bar|^2 - v_1^2``, the direction factor of the boundary curvature."""
    v = np.asarray(v, dtype=float)
    return float(np.dot(bar(v), bar(v)) - v[0] ** 2)
