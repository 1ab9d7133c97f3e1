"""Quadratic-growth evidence by sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from curvkit.core.smooth import SmoothMap
from curvkit.errors import Unsupported
from curvkit.oracle.evaluators import as_evaluator, from_callable
from curvkit.sets.atoms import ClosedSet, projectable
from curvkit.sets.projection import dist_many

VIOLATION_TOL = 1e-12
SHELLS = 12
BATCH = 8192


class GrowthVerdict(Enum):
    HOLDS = "Holds"
    FAILS_AT = "FailsAt"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GrowthReport:
    """``HOLDS`` only means that no sampled point violated the growth inequality."""

    verdict: GrowthVerdict
    witness: tuple | None = None
    violation: float = 0.0
    samples: int = 0
    eps: float = 0.0
    delta: float = 0.0

    def __bool__(self):
        return self.verdict is GrowthVerdict.HOLDS

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "witness": None if self.witness is None else list(self.witness),
            "violation": self.violation,
            "samples": self.samples,
            "eps": self.eps,
            "delta": self.delta,
        }


def growth_samples(n: int, delta: float, count: int, seed: int) -> np.ndarray:
    """Half uniform in the ball, half on dyadic radial shells."""
    rng = np.random.default_rng([seed, 7])
    n_uniform = count // 2
    g = rng.standard_normal((count, n))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    radii = np.empty(count)
    radii[:n_uniform] = delta * rng.random(n_uniform) ** (1.0 / n)
    shell = np.arange(count - n_uniform) % SHELLS
    radii[n_uniform:] = delta * 0.5**shell * (0.5 + 0.5 * rng.random(count - n_uniform))
    return g * radii[:, None]


def verify_quadratic_growth(h, z, eps: float, delta: float, n_samples: int = 100_000, seed: int = 0) -> GrowthReport:
    """Search ``B_delta(z)`` for points with ``h(x) < h(z) + eps |x - z|^2``."""
    if not (eps > 0 and delta > 0):
        raise ValueError("eps and delta must be positive")
    z = np.asarray(z, dtype=float).reshape(-1)
    ev = as_evaluator(h, len(z))
    hz = float(ev(z[None])[0])
    if not math.isfinite(hz):
        return GrowthReport(GrowthVerdict.INCONCLUSIVE, samples=0, eps=eps, delta=delta)
    D = growth_samples(len(z), delta, n_samples, seed)
    worst, witness = 0.0, None
    for start in range(0, len(D), BATCH):
        block = D[start : start + BATCH]
        vals = ev(z + block)
        gap = vals - hz - eps * np.einsum("ij,ij->i", block, block)
        i = int(np.argmin(gap))
        if gap[i] < -VIOLATION_TOL and gap[i] < worst:
            worst, witness = float(gap[i]), tuple((z + block[i]).tolist())
    if witness is not None:
        return GrowthReport(GrowthVerdict.FAILS_AT, witness, worst, n_samples, eps, delta)
    return GrowthReport(GrowthVerdict.HOLDS, None, 0.0, n_samples, eps, delta)


def essential_objective(f0: SmoothMap, F: SmoothMap, C: ClosedSet, x):
    """``max{f0(.) - f0(x), dist(F(.), C)}`` as a vectorized evaluator."""
    if not projectable(C):
        raise Unsupported("distance to this set is not available")
    x = np.asarray(x, dtype=float).reshape(f0.dim_in)
    f0x = f0.scalar(x)

    def fn(X):
        return np.maximum(f0.value_many(X)[:, 0] - f0x, dist_many(C, F.value_many(X)))

    return from_callable(fn, f0.dim_in)


def verify_essential_min(
    f0: SmoothMap, F: SmoothMap, C: ClosedSet, x, eps: float, delta: float, n_samples: int = 100_000, seed: int = 0
) -> GrowthReport:
    """Growth of the essential-minimizer merit function around ``x``."""
    return verify_quadratic_growth(essential_objective(f0, F, C, x), x, eps, delta, n_samples, seed)
