from curvkit.core.extreal import (
    NEG_INF,
    POS_INF,
    ExtendedReal,
    extreal,
    extreal_scale,
    extreal_sum,
    extreal_total,
    is_finite,
    tag,
)
from curvkit.core.fdcheck import FDReport, fd_check
from curvkit.core.rational import fraction_matrix, fraction_vector, to_fraction
from curvkit.core.smooth import (
    AffineMap,
    Combination,
    FunctionMap,
    PolyForm,
    SmoothMap,
    Stack,
    compose_affine,
    smooth_eval2,
)

__all__ = [
    "NEG_INF",
    "POS_INF",
    "ExtendedReal",
    "extreal",
    "extreal_scale",
    "extreal_sum",
    "extreal_total",
    "is_finite",
    "tag",
    "FDReport",
    "fd_check",
    "fraction_matrix",
    "fraction_vector",
    "to_fraction",
    "AffineMap",
    "Combination",
    "FunctionMap",
    "PolyForm",
    "SmoothMap",
    "Stack",
    "compose_affine",
    "smooth_eval2",
]
