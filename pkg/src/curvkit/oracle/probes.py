"""Directional neighborhoods and projection probes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from curvkit.oracle.grid import SampleGrid
from curvkit.sets.atoms import ClosedSet, atoms_dim_check
from curvkit.sets.projection import project


def dir_neighborhood_member(w, delta: float, rho: float, wp) -> bool:
    """``wp`` in the directional neighborhood of ``w``: a ball of radius delta cut by an angular cone."""
    if not (delta > 0 and rho > 0):
        raise ValueError("delta and rho must be positive")
    w = np.asarray(w, dtype=float)
    wp = np.asarray(wp, dtype=float)
    nw, nwp = float(np.linalg.norm(w)), float(np.linalg.norm(wp))
    if nwp > delta:
        return False
    return float(np.linalg.norm(nw * wp - nwp * w)) <= rho * nwp * nw + 1e-15 * (1.0 + nwp * nw)


@dataclass(frozen=True)
class ProjectionProbe:
    scales: tuple
    residuals: tuple
    ratios: tuple

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def to_dict(self) -> dict:
        return {
            "scales": list(self.scales),
            "residuals": list(self.residuals),
            "ratios": list(self.ratios),
            "final_residual": self.final_residual,
            "max_ratio": self.max_ratio,
        }


def projection_alignment_probe(S: ClosedSet, x, u, grid: SampleGrid | None = None) -> ProjectionProbe:
    """Projections of ``x + t u`` for ``t`` on the grid ladder.

    Residual: distance between the displacements, divided by the step |t u|, of the
    projection and of the probe point. Ratio: ``|y - x| / |x_t - x|``.
    """
    grid = grid or SampleGrid()
    x = atoms_dim_check(S, x)
    u = atoms_dim_check(S, u)
    nu = float(np.linalg.norm(u))
    if nu == 0:
        raise ValueError("probe direction must be nonzero")
    scales, residuals, ratios = [], [], []
    for k in range(grid.levels):
        t = grid.scale(k)
        xt = x + t * u
        step = t * nu
        worst_res, worst_ratio = 0.0, 0.0
        for y in project(S, xt):
            worst_res = max(worst_res, float(np.linalg.norm((y - x) / step - (xt - x) / step)))
            worst_ratio = max(worst_ratio, float(np.linalg.norm(y - x)) / step)
        scales.append(t)
        residuals.append(worst_res)
        ratios.append(worst_ratio)
    return ProjectionProbe(tuple(scales), tuple(residuals), tuple(ratios))


def sequence_ratio_probe(projector, x, y_limit, points) -> list[float]:
    """``|P(x_k) - y_limit| / |x_k - x|`` along a user sequence ``x_k``.

    Bounded ratios are what inner calmness* asks for; unbounded growth
    refutes it for the given projector.
    """
    x = np.asarray(x, dtype=float)
    y_limit = np.asarray(y_limit, dtype=float)
    out = []
    for p in points:
        p = np.asarray(p, dtype=float)
        out.append(float(np.linalg.norm(np.asarray(projector(p)) - y_limit)) / float(np.linalg.norm(p - x)))
    return out


def sphere_center_sequence(k_max: int = 12):
    """``x_k = k^-2 (cos 1/k, sin 1/k)`` approaching the center of the unit circle along turning rays."""
    return [np.array([np.cos(1.0 / k), np.sin(1.0 / k)]) / k**2 for k in range(1, k_max + 1)]


def circle_projection(p):
    return np.asarray(p, dtype=float) / float(np.linalg.norm(p))
