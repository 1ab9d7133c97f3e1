import numpy as np
import pytest

from curvkit.core import PolyForm
from curvkit.errors import DimensionMismatch, Unsupported
from curvkit.sets import (
    Box,
    Polyhedron,
    PolyhedralUnion,
    PreImage,
    Product,
    SecondOrderCone,
    Ternary,
    dist,
    member,
    normal_of_tangent_member,
    project,
    project_many,
    proximal_normal_member,
    tangent_cone,
    tangent_member,
    tangent_status,
)


def complementarity():
    # {y >= 0, x = 0} ∪ {x >= 0, y = 0}
    return PolyhedralUnion(
        (
            Polyhedron(A=[[0, -1]], b=[0], E=[[1, 0]], e=[0]),
            Polyhedron(A=[[-1, 0]], b=[0], E=[[0, 1]], e=[0]),
        )
    )


def unit_disc():
    return PreImage(PolyForm("quadratic", 2, Q=2 * np.eye(2), c=-1.0), Polyhedron.nonpositive())


def test_rational_entries_are_kept_exact():
    P = Polyhedron(A=[["1/3", 1]], b=["2/3"])
    assert P.rational
    assert member(P, [2 / 3, 4 / 9])
    assert not member(P, [3.0, 0.0])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        member(Box([0, 0], [1, 1]), [0.5])
    with pytest.raises(DimensionMismatch):
        Box([0, 0], [1])


def test_soc_rejects_small_dimension():
    with pytest.raises(ValueError):
        SecondOrderCone(2)


def test_box_membership_with_infinite_bounds():
    B = Box([-np.inf, 0], [1, np.inf])
    assert member(B, [-1e9, 1e9])
    assert not member(B, [2, 0])


def test_projection_onto_polyhedron_vertex():
    P = Polyhedron(A=[[1, 0], [0, 1], [-1, -1]], b=[1, 1, 1])
    (p,) = project(P, [3.0, 2.0])
    assert np.allclose(p, [1, 1])
    assert dist(P, [3.0, 2.0]) == pytest.approx(np.sqrt(5))


def test_polyhedron_projection_is_feasible_to_rounding():
    # Points far outside land on a face; the second-order oracle divides
    # slack by t**2, so feasibility error must stay at rounding level.
    rng = np.random.default_rng(3)
    P = Polyhedron(A=rng.normal(size=(6, 3)), b=rng.uniform(0.5, 1, size=6))
    X = rng.normal(scale=50, size=(200, 3))
    Y = project_many(P, X)
    slack = Y @ P.A.T - P.b
    assert slack.max() <= 1e-12 * (1 + np.abs(X).max())


def test_union_projection_reports_ties():
    pts = project(complementarity(), [1.0, 1.0])
    assert sorted(map(tuple, np.round(pts, 12))) == [(0.0, 1.0), (1.0, 0.0)]


def test_soc_projection_cases():
    K = SecondOrderCone(3)
    assert np.allclose(project(K, [2, 1, 0])[0], [2, 1, 0])
    assert np.allclose(project(K, [-2, 1, 0])[0], 0)
    assert np.allclose(project(K, [0, 2, 0])[0], [1, 1, 0])


def test_preimage_projection_is_not_offered():
    with pytest.raises(Unsupported):
        project(unit_disc(), [3.0, 4.0])


def test_tangent_cone_of_polyhedron_vertex():
    P = Polyhedron.nonnegative(2)
    assert tangent_member(P, [0, 0], [1, 2])
    assert not tangent_member(P, [0, 0], [-1, 2])
    assert tangent_member(P, [1, 0], [-1, 0])
    T = tangent_cone(P, [0, 1])
    assert member(T, [3, -5]) and not member(T, [-1, 0])


def test_tangent_cone_of_union_at_origin():
    U = complementarity()
    assert tangent_member(U, [0, 0], [0, 1])
    assert tangent_member(U, [0, 0], [2, 0])
    assert not tangent_member(U, [0, 0], [1, 1])


def test_tangent_cone_of_soc():
    K = SecondOrderCone(3)
    y = np.array([1.0, 1.0, 0.0])
    assert tangent_member(K, y, [0, -1, 5])
    assert not tangent_member(K, y, [0, 1, 0])
    assert tangent_member(K, [0, 0, 0], [1, 0.5, 0.5])
    assert not tangent_member(K, [0, 0, 0], [1, 2, 0])


def test_tangent_cone_of_disc_is_exact_without_degeneracy():
    ans = tangent_status(unit_disc(), [1.0, 0.0], [-0.1, 1.0])
    assert ans.member and ans.exact
    assert not tangent_member(unit_disc(), [1.0, 0.0], [0.1, 1.0])


def test_tangent_of_product_is_componentwise():
    S = Product((Polyhedron.nonpositive(), SecondOrderCone(3)))
    y = [0.0, 1.0, 1.0, 0.0]
    assert tangent_member(S, y, [-1, 0, -1, 0])
    assert not tangent_member(S, y, [1, 0, -1, 0])


def test_normal_of_tangent_cone_for_float_data():
    # Generic float rows used to fail the exact rational test.
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    P = Polyhedron(A=A, b=np.zeros(3))
    v = -np.linalg.solve(A, [0.0, 1.0, 1.0])  # A v = (0, -1, -1)
    lam = 0.37 * A[0]
    assert normal_of_tangent_member(P, np.zeros(3), v, lam)
    assert not normal_of_tangent_member(P, np.zeros(3), v, -lam)


def test_normal_of_tangent_cone_exact_mode():
    P = Polyhedron.nonnegative(2)
    assert normal_of_tangent_member(P, [0, 0], [0, 1], [-1, 0], exact=True)
    assert not normal_of_tangent_member(P, [0, 0], [0, 1], [-1, -1], exact=True)


def test_proximal_normal_of_halfline():
    P = Polyhedron.nonpositive()
    assert proximal_normal_member(P, [0.0], [0.0], [2.0]) is Ternary.YES
    assert proximal_normal_member(P, [0.0], [-1.0], [2.0]) is Ternary.NO
    assert proximal_normal_member(P, [0.0], [1.0], [2.0], mode="pre") is Ternary.NO
