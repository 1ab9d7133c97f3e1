"""Liminf estimators for first and second subderivatives."""

from __future__ import annotations

import math

import numpy as np

from curvkit.oracle.evaluators import as_evaluator
from curvkit.oracle.grid import CHUNK, OracleEstimate, SampleGrid, classify

REJECTION_FACTOR = 10


def ball_chunk(seed: int, level: int, chunk: int, n: int) -> np.ndarray:
    """Uniform samples in the unit ball; one stream per (seed, level, chunk)."""
    rng = np.random.default_rng([seed, level, chunk])
    g = rng.standard_normal((CHUNK, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = rng.random((CHUNK, 1)) ** (1.0 / n)
    return g / norms * radii


def level_directions(grid: SampleGrid, level: int, w, count: int) -> np.ndarray:
    """``w`` followed by ``count`` points of the ball of radius r_level around it."""
    n = len(w)
    chunks = -(-count // CHUNK)
    ball = np.vstack([ball_chunk(grid.seed, level, c, n) for c in range(chunks)])[:count]
    return np.vstack([w[None], w + grid.radius(level) * ball])


def _ladder(h, z, w, grid: SampleGrid, quotient):
    ev = as_evaluator(h, len(z))
    z = np.asarray(z, dtype=float).reshape(ev.dim)
    w = np.asarray(w, dtype=float).reshape(ev.dim)
    hz = float(ev(z[None])[0])
    if not math.isfinite(hz):
        raise ValueError("the function must be finite at the base point")
    count = grid.dir_samples
    if ev.constrained and ev.project is None:
        count *= REJECTION_FACTOR
    minima, points = [], []
    for k in range(grid.levels):
        t = grid.scale(k)
        r = grid.radius(k)
        W = level_directions(grid, k, w, count)
        if ev.project is not None:
            P = ev.project(z + t * W)
            W = (P - z) / t
            W = W[np.linalg.norm(W - w, axis=1) <= r * (1 + 1e-12) + 1e-15]
        if len(W) == 0:
            minima.append(math.inf)
            points.append((t, w.tolist()))
            continue
        vals = ev(z + t * W)
        with np.errstate(invalid="ignore"):
            q = quotient(vals - hz, t, W)
        q = np.where(np.isfinite(vals), q, math.inf)
        i = int(np.argmin(q))
        minima.append(float(q[i]))
        points.append((t, W[i].tolist()))
    cls, value = classify(minima)
    return OracleEstimate(tuple(minima), cls, value, tuple(points))


def estimate_d(h, z, w, grid: SampleGrid | None = None) -> OracleEstimate:
    """Sampled first subderivative."""
    return _ladder(h, z, w, grid or SampleGrid(), lambda diff, t, W: diff / t)


def estimate_d2(h, z, zs, w, grid: SampleGrid | None = None) -> OracleEstimate:
    """Sampled second subderivative for the multiplier ``zs``."""
    zs = np.asarray(zs, dtype=float).reshape(-1)
    return _ladder(h, z, w, grid or SampleGrid(), lambda diff, t, W: (diff - t * (W @ zs)) / (0.5 * t * t))
