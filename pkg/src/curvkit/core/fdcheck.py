"""Finite-difference validation of derivative callables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from curvkit.core.smooth import SmoothMap


@dataclass(frozen=True)
class ProbeResult:
    name: str
    point: tuple
    jacobian_error: float
    hessian_error: float
    symmetry_error: float


@dataclass(frozen=True)
class FDReport:
    tol: float
    probes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def failures(self) -> list:
        return [
            p
            for p in self.probes
            if p.jacobian_error > self.tol or p.hessian_error > self.tol or p.symmetry_error > 1e-12
        ]

    @property
    def max_error(self) -> float:
        if not self.probes:
            return 0.0
        return max(max(p.jacobian_error, p.hessian_error) for p in self.probes)


def _rel_err(approx, exact) -> float:
    scale = max(1.0, float(np.max(np.abs(exact))) if exact.size else 1.0)
    return float(np.max(np.abs(approx - exact))) / scale if exact.size else 0.0


def fd_check(f: SmoothMap, probes, tol: float, names=None) -> FDReport:
    """Compare ``f.jacobian``/``f.hessian`` with central differences.

    The Jacobian is differenced from ``f.value`` and the Hessians from
    ``f.jacobian``, both with step ``1e-5 * (1 + |x|)``. Errors are max-abs
    differences relative to ``max(1, max|exact|)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    results = []
    for k, x in enumerate(probes):
        x = np.asarray(x, dtype=float).reshape(f.dim_in)
        h = 1e-5 * (1.0 + np.linalg.norm(x))
        jac = f.jacobian(x)
        hess = f.hessian(x)
        jac_fd = np.empty_like(jac)
        hess_fd = np.empty_like(hess)
        for j in range(f.dim_in):
            e = np.zeros(f.dim_in)
            e[j] = h
            jac_fd[:, j] = (f.value(x + e) - f.value(x - e)) / (2 * h)
            hess_fd[:, :, j] = (f.jacobian(x + e) - f.jacobian(x - e)) / (2 * h)
        sym = float(np.max(np.abs(hess - np.swapaxes(hess, 1, 2)))) if hess.size else 0.0
        name = names[k] if names is not None else f"probe[{k}]"
        results.append(ProbeResult(name, tuple(x), _rel_err(jac_fd, jac), _rel_err(hess_fd, hess), sym))
    return FDReport(tol, results)
