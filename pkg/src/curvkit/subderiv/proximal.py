"""Membership in directional proximal subdifferentials."""

from __future__ import annotations

import math

import numpy as np

from curvkit.errors import MissingCandidates, NoBound, Unsupported
from curvkit.sets.geometry import Ternary, proximal_normal_member
from curvkit.subderiv.expr import FunctionExpr, Indicator
from curvkit.subderiv.first import _vec, subderivative
from curvkit.subderiv.second import TOL, d2


def proximal_subdiff_member(h: FunctionExpr, z, w, zs, mode: str = "pre") -> Ternary:
    """Whether ``zs`` is a directional proximal (pre-)subgradient of ``h`` at ``z`` in direction ``w``.

    ``mode`` is ``"pre"`` or ``"plain"``; the plain subdifferential also
    requires ``<zs, w>`` to equal the first subderivative.
    """
    if mode not in ("pre", "plain"):
        raise ValueError("mode must be 'pre' or 'plain'")
    z, w, zs = _vec(h, z), _vec(h, w), _vec(h, zs)
    if isinstance(h, Indicator):
        return proximal_normal_member(h.S, z, w, zs, "pre" if mode == "pre" else "normal")
    try:
        d1 = subderivative(h, z, w)
    except (NoBound, Unsupported, MissingCandidates):
        d1 = None
    ip = float(zs @ w)
    tol = TOL * (1.0 + float(np.linalg.norm(zs))) * (1.0 + float(np.linalg.norm(w)))
    if d1 is not None and d1.exact and not math.isfinite(d1.value):
        return Ternary.NO
    if mode == "plain" and d1 is not None:
        if d1.exact and abs(d1.value - ip) > tol:
            return Ternary.NO
        if d1.is_lower and d1.value > ip + tol:
            return Ternary.NO
    verdict = _pre(h, z, w, zs, d1, ip, tol)
    if d1 is None or not d1.exact:
        # Finiteness of the first subderivative is not established.
        return Ternary.NO if verdict is Ternary.NO else Ternary.UNKNOWN
    return verdict


def _pre(h, z, w, zs, d1, ip, tol) -> Ternary:
    if d1 is not None and d1.is_lower and math.isfinite(d1.value) and d1.value > ip + tol:
        return Ternary.YES
    try:
        return d2(h, z, zs, w).prenormal_verdict()
    except (NoBound, Unsupported, MissingCandidates):
        return Ternary.UNKNOWN
