from curvkit.oracle.estimate import estimate_d, estimate_d2
from curvkit.oracle.evaluators import Evaluator, as_evaluator, from_callable, from_expr
from curvkit.oracle.grid import Classification, OracleEstimate, SampleGrid, classify
from curvkit.oracle.growth import (
    GrowthReport,
    GrowthVerdict,
    essential_objective,
    verify_essential_min,
    verify_quadratic_growth,
)
from curvkit.oracle.probes import (
    ProjectionProbe,
    circle_projection,
    dir_neighborhood_member,
    projection_alignment_probe,
    sequence_ratio_probe,
    sphere_center_sequence,
)

__all__ = [
    "estimate_d",
    "estimate_d2",
    "Evaluator",
    "as_evaluator",
    "from_callable",
    "from_expr",
    "Classification",
    "OracleEstimate",
    "SampleGrid",
    "classify",
    "GrowthReport",
    "GrowthVerdict",
    "essential_objective",
    "verify_essential_min",
    "verify_quadratic_growth",
    "ProjectionProbe",
    "circle_projection",
    "dir_neighborhood_member",
    "projection_alignment_probe",
    "sequence_ratio_probe",
    "sphere_center_sequence",
]
