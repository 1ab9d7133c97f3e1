"""Second-order sufficient condition certificates."""

from curvkit.lp import LPResult, RationalLP, fourier_motzkin_feasible, lp_feasible
from curvkit.sosc.certify import (
    Auto,
    Certificate,
    DirectionCertificate,
    DirectionsList,
    FixedMultiplier,
    LPSearch,
    NotFound,
    SampledSphere,
    SubspaceExact,
    SuppliedList,
    Verdict,
    certify,
    certify_composite,
    certify_direction_geometric,
    certify_disjunctive,
    certify_socp,
    certify_structured,
    curvature_theta,
    direction_quantity,
    parse_mode,
)
from curvkit.sosc.cones import (
    ConePiece,
    critical_cone_member,
    critical_pieces,
    critical_subspace,
    sample_critical_directions,
)
from curvkit.sosc.multipliers import MultiplierSpace, add_normal_block, multiplier_space
from curvkit.sosc.problem import ProblemInstance, ProblemKind, soc_blocks

__all__ = [
    "LPResult",
    "RationalLP",
    "fourier_motzkin_feasible",
    "lp_feasible",
    "Auto",
    "Certificate",
    "DirectionCertificate",
    "DirectionsList",
    "FixedMultiplier",
    "LPSearch",
    "NotFound",
    "SampledSphere",
    "SubspaceExact",
    "SuppliedList",
    "Verdict",
    "certify",
    "certify_composite",
    "certify_direction_geometric",
    "certify_disjunctive",
    "certify_socp",
    "certify_structured",
    "curvature_theta",
    "direction_quantity",
    "parse_mode",
    "ConePiece",
    "critical_cone_member",
    "critical_pieces",
    "critical_subspace",
    "sample_critical_directions",
    "MultiplierSpace",
    "add_normal_block",
    "multiplier_space",
    "ProblemInstance",
    "ProblemKind",
    "soc_blocks",
]
