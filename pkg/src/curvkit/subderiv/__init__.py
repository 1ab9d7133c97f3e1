from curvkit.subderiv.evaluate import value, value_many
from curvkit.subderiv.expr import (
    Compose,
    Dist,
    EuclNorm,
    FunctionExpr,
    Indicator,
    L0,
    MarginalFinite,
    Scaled,
    SeparableSum,
    Smooth,
    SumSmooth,
    VecMax,
    expr_sum,
)
from curvkit.subderiv.first import subderivative
from curvkit.subderiv.indicator import (
    d2_indicator,
    d2_indicator_polyunion,
    d2_indicator_product,
    d2_indicator_scalar_halfline,
    d2_indicator_soc,
)
from curvkit.subderiv.proximal import proximal_subdiff_member
from curvkit.subderiv.second import (
    d2,
    d2_chain,
    d2_dist,
    d2_graph_indicator,
    d2_image,
    d2_marginal_finite,
    d2_nonsmooth_chain,
    d2_preimage,
)
from curvkit.subderiv.values import BoundedValue, Kind

__all__ = [
    "value",
    "value_many",
    "Compose",
    "Dist",
    "EuclNorm",
    "FunctionExpr",
    "Indicator",
    "L0",
    "MarginalFinite",
    "Scaled",
    "SeparableSum",
    "Smooth",
    "SumSmooth",
    "VecMax",
    "expr_sum",
    "subderivative",
    "d2_indicator",
    "d2_indicator_polyunion",
    "d2_indicator_product",
    "d2_indicator_scalar_halfline",
    "d2_indicator_soc",
    "proximal_subdiff_member",
    "d2",
    "d2_chain",
    "d2_dist",
    "d2_graph_indicator",
    "d2_image",
    "d2_marginal_finite",
    "d2_nonsmooth_chain",
    "d2_preimage",
    "BoundedValue",
    "Kind",
]
