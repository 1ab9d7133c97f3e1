from curvkit.sets.atoms import (
    ACTIVE_TOL,
    Box,
    ClosedSet,
    Image,
    ImageCandidate,
    Polyhedron,
    PolyhedralUnion,
    PreImage,
    Product,
    SecondOrderCone,
    is_convex_atom,
    is_exact_atom,
    is_polyhedral,
    projectable,
)
from curvkit.sets.geometry import (
    TangentAnswer,
    Ternary,
    active_branches,
    box_as_polyhedron,
    convex_normal_dir_member,
    member,
    normal_of_tangent_member,
    proximal_normal_member,
    tangent_branches,
    tangent_cone,
    tangent_member,
    tangent_status,
)
from curvkit.sets.projection import dist, dist_many, project, project_many

__all__ = [
    "ACTIVE_TOL",
    "Box",
    "ClosedSet",
    "Image",
    "ImageCandidate",
    "Polyhedron",
    "PolyhedralUnion",
    "PreImage",
    "Product",
    "SecondOrderCone",
    "is_convex_atom",
    "is_exact_atom",
    "is_polyhedral",
    "projectable",
    "TangentAnswer",
    "Ternary",
    "active_branches",
    "box_as_polyhedron",
    "convex_normal_dir_member",
    "member",
    "normal_of_tangent_member",
    "proximal_normal_member",
    "tangent_branches",
    "tangent_cone",
    "tangent_member",
    "tangent_status",
    "dist",
    "dist_many",
    "project",
    "project_many",
]
