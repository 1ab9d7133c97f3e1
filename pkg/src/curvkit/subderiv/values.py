"""Rule outputs tagged with the side of the inequality they come from."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from curvkit.core.extreal import extreal_scale, to_json
from curvkit.sets.geometry import Ternary


class Kind(Enum):
    EXACT = "Exact"
    LOWER_BOUND = "LowerBound"
    UPPER_BOUND = "UpperBound"
    EXACT_OVER_CANDIDATES = "ExactOverCandidates"


@dataclass(frozen=True)
class BoundedValue:
    """An extended-real value together with what is known about it.

    ``LOWER_BOUND`` means the true quantity is at least ``value``; the upper
    kinds mean it is at most ``value``. ``EXACT_OVER_CANDIDATES`` is exact
    provided the supplied candidate lists are complete.
    """

    value: float
    kind: Kind = Kind.EXACT
    witness: Any = None
    trace: tuple = field(default=())

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        object.__setattr__(self, "value", v)
        # A bound at the matching infinity pins the value down.
        if (self.kind is Kind.LOWER_BOUND and v == math.inf) or (
            self.kind in (Kind.UPPER_BOUND, Kind.EXACT_OVER_CANDIDATES) and v == -math.inf
        ):
            object.__setattr__(self, "kind", Kind.EXACT)

    @property
    def exact(self) -> bool:
        return self.kind is Kind.EXACT

    @property
    def is_lower(self) -> bool:
        """True when ``value`` is a valid lower bound."""
        return self.kind in (Kind.EXACT, Kind.LOWER_BOUND)

    @property
    def is_upper(self) -> bool:
        return self.kind in (Kind.EXACT, Kind.UPPER_BOUND, Kind.EXACT_OVER_CANDIDATES)

    def with_trace(self, *entries) -> "BoundedValue":
        return replace(self, trace=tuple(entries) + self.trace)

    def as_lower(self) -> "BoundedValue":
        return self if self.kind is Kind.EXACT else replace(self, kind=Kind.LOWER_BOUND)

    def scaled(self, alpha: float) -> "BoundedValue":
        return replace(self, value=extreal_scale(alpha, self.value))

    def prenormal_verdict(self) -> Ternary:
        """Whether the value is known to exceed -inf."""
        if self.value > -math.inf:
            return Ternary.YES if self.is_lower else Ternary.UNKNOWN
        return Ternary.NO if self.is_upper else Ternary.UNKNOWN

    def to_dict(self) -> dict:
        out = {"value": to_json(self.value), "kind": self.kind.value, "trace": list(self.trace)}
        if self.witness is not None:
            out["witness"] = _jsonable(self.witness)
        return out


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return to_json(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return str(obj) if not isinstance(obj, (str, bool, type(None))) else obj


def exact(value, rule: str = "", witness=None) -> BoundedValue:
    return BoundedValue(value, Kind.EXACT, witness, (rule,) if rule else ())


def lower(value, rule: str = "", witness=None) -> BoundedValue:
    return BoundedValue(value, Kind.LOWER_BOUND, witness, (rule,) if rule else ())


def upper(value, rule: str = "", witness=None) -> BoundedValue:
    return BoundedValue(value, Kind.UPPER_BOUND, witness, (rule,) if rule else ())
