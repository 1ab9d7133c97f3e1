"""Sampling grids and the classification of level minima."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from curvkit.core.extreal import to_json

DIVERGENCE_THRESHOLD = 1e3
CHUNK = 64


@dataclass(frozen=True)
class SampleGrid:
    """Geometric ladder of scales ``t0 * rho**k`` with shrinking direction balls."""

    t0: float = 1e-1
    rho: float = 0.5
    levels: int = 16
    dir_samples: int = 256
    dir_radius0: float = 0.5
    dir_decay: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not (self.t0 > 0 and self.dir_radius0 > 0 and self.levels > 0 and self.dir_samples > 0):
            raise ValueError("grid parameters must be positive")
        if not (0 < self.rho < 1 and 0 < self.dir_decay < 1):
            raise ValueError("decay factors must lie in (0, 1)")
        if self.dir_radius0 * self.dir_decay**self.levels <= 1e-12:
            raise ValueError("direction radius falls below 1e-12 on the finest level")

    def scale(self, level: int) -> float:
        return self.t0 * self.rho**level

    def radius(self, level: int) -> float:
        return self.dir_radius0 * self.dir_decay**level

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("t0", "rho", "levels", "dir_samples", "dir_radius0", "dir_decay", "seed")}


class Classification(Enum):
    CONVERGES_TO = "ConvergesTo"
    DIVERGES_UP = "DivergesUp"
    DIVERGES_DOWN = "DivergesDown"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class OracleEstimate:
    level_minima: tuple
    classification: Classification
    value: float | None = None
    certificate_points: tuple = field(default=(), repr=False)

    @property
    def label(self) -> str:
        if self.classification is Classification.CONVERGES_TO:
            return f"ConvergesTo({self.value:.6g})"
        return self.classification.value

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "value": None if self.value is None else to_json(self.value),
            "level_minima": [to_json(v) for v in self.level_minima],
            "certificate_points": [{"t": t, "direction": list(w)} for t, w in self.certificate_points],
        }


def classify(minima, atol: float = 1e-2, rtol: float = 5e-2, threshold: float = DIVERGENCE_THRESHOLD):
    """Classification and value of a sequence of level minima."""
    minima = list(minima)
    if len(minima) >= 2:
        a, b = minima[-2], minima[-1]
        if a > threshold and b > threshold and b >= a:
            return Classification.DIVERGES_UP, None
        if a < -threshold and b < -threshold and b <= a:
            return Classification.DIVERGES_DOWN, None
    if len(minima) >= 4:
        tail = minima[-4:]
        if all(math.isfinite(v) for v in tail):
            last = tail[-1]
            if max(tail) - min(tail) <= atol + rtol * abs(last):
                return Classification.CONVERGES_TO, last
    return Classification.INCONCLUSIVE, None
