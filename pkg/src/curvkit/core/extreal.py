"""Extended real numbers.

Values on the extended real line are plain Python floats, with
``math.inf`` and ``-math.inf`` for the two infinities. IEEE ordering
already puts ``-inf`` below every finite number and ``+inf`` above, so
comparison needs no help. Addition is the single place where IEEE and the
extended-real conventions disagree: ``inf + -inf`` is NaN in IEEE but must
be rejected here, so sums go through :func:`extreal_sum`.
"""

from __future__ import annotations

import math
from numbers import Real

from curvkit.errors import IndeterminateSum

ExtendedReal = float

POS_INF = math.inf
NEG_INF = -math.inf

NEG_INF_TAG = "NegInf"
FINITE_TAG = "Finite"
POS_INF_TAG = "PosInf"


def extreal(x) -> float:
    """Coerce ``x`` to an extended real, rejecting NaN."""
    if isinstance(x, str):
        x = {"+inf": math.inf, "inf": math.inf, "-inf": -math.inf}.get(x.strip().lower(), x)
    value = float(x)
    if math.isnan(value):
        raise ValueError("NaN is not an extended real")
    return value


def tag(x: float) -> str:
    if x == math.inf:
        return POS_INF_TAG
    if x == -math.inf:
        return NEG_INF_TAG
    if math.isnan(x):
        raise ValueError("NaN is not an extended real")
    return FINITE_TAG


def is_finite(x: float) -> bool:
    return math.isfinite(x)


def extreal_sum(a: float, b: float) -> float:
    """Sum of two extended reals; raises :class:`IndeterminateSum` on ``inf - inf``."""
    if (a == math.inf and b == -math.inf) or (a == -math.inf and b == math.inf):
        raise IndeterminateSum(f"{a} + {b}")
    return a + b


def extreal_total(values) -> float:
    """Sum an iterable of extended reals, refusing mixed infinities."""
    has_pos = has_neg = False
    total = 0.0
    for v in values:
        if v == math.inf:
            has_pos = True
        elif v == -math.inf:
            has_neg = True
        else:
            total += v
    if has_pos and has_neg:
        raise IndeterminateSum("summands contain both +inf and -inf")
    if has_pos:
        return math.inf
    if has_neg:
        return -math.inf
    return total


def extreal_scale(alpha: Real, x: float) -> float:
    """``alpha * x`` for ``alpha > 0``; infinities keep their sign."""
    if not alpha > 0:
        raise ValueError("scaling factor must be positive")
    if math.isinf(x):
        return x
    return float(alpha) * x


def to_json(x: float):
    """JSON-safe encoding: infinities become the strings ``"+inf"``/``"-inf"``."""
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


def from_json(x) -> float:
    return extreal(x)
