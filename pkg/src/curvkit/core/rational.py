"""Conversion between binary64 data and exact rationals."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

# Float data that sits this close to a short fraction is snapped to it, so that
# rounding noise from upstream arithmetic (0.1 + 0.2) does not break exact LPs.
SNAP_DENOMINATOR = 10**9
SNAP_TOL = 1e-12


def to_fraction(x, exact: bool = False) -> Fraction:
    """Convert a scalar to :class:`Fraction`.

    Integers, fractions and decimal strings convert exactly. Floats convert
    exactly when ``exact`` is set; otherwise they are snapped to the nearest
    fraction with denominator at most ``SNAP_DENOMINATOR`` when that is within
    ``SNAP_TOL`` (relative), and converted exactly when not.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    value = float(x)
    if not np.isfinite(value):
        raise ValueError(f"cannot convert {value} to a rational")
    frac = Fraction(value)
    if exact:
        return frac
    snapped = frac.limit_denominator(SNAP_DENOMINATOR)
    if abs(float(snapped) - value) <= SNAP_TOL * max(1.0, abs(value)):
        return snapped
    return frac


def fraction_vector(values, exact: bool = False) -> list[Fraction]:
    return [to_fraction(v, exact) for v in np.asarray(values, dtype=object).ravel()]


def fraction_matrix(values, exact: bool = False) -> list[list[Fraction]]:
    arr = np.asarray(values, dtype=object)
    if arr.size == 0:
        return [[] for _ in range(arr.shape[0])] if arr.ndim == 2 else []
    return [[to_fraction(v, exact) for v in row] for row in arr]


def parse_scalar(x):
    """Parse a JSON scalar that may be a rational string such as ``"1/3"``.

    Returns a Fraction for rational strings and a float otherwise.
    """
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf"):
            return float("inf")
        if s == "-inf":
            return float("-inf")
        return Fraction(s)
    return x
