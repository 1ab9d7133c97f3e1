import inspect
import math
from fractions import Fraction

import numpy as np
import pytest

from curvkit.core import AffineMap, PolyForm
from curvkit.errors import DimensionMismatch, InfeasibleBasePoint, MissingCandidates
from curvkit.sets import Polyhedron, PreImage, Product, SecondOrderCone
from curvkit.sosc import (
    DirectionCertificate,
    DirectionsList,
    FixedMultiplier,
    NotFound,
    ProblemInstance,
    RationalLP,
    SampledSphere,
    SubspaceExact,
    SuppliedList,
    Verdict,
    certify,
    certify_composite,
    certify_direction_geometric,
    certify_socp,
    curvature_theta,
    fourier_motzkin_feasible,
    lp_feasible,
    parse_mode,
)


def disk(objective):
    # min <objective, x> subject to (1, x1, x2) in the ice-cream cone, at x = (1, 0).
    G = AffineMap([[0, 0], [1, 0], [0, 1]], [1, 0, 0])
    return ProblemInstance("socp", PolyForm.affine(objective), G, [1, 0], C=SecondOrderCone(3))


def test_lp_small_systems():
    lp = RationalLP(exact=True)
    x = lp.add_var("x", nonneg=True)
    lp.add_ge({x: 1}, 1)
    res = lp_feasible(lp)
    assert res and res.point[x] == 1
    assert lp.satisfied_by(res.point)
    lp = RationalLP(exact=True)
    x = lp.add_var("x", nonneg=True)
    lp.add_le({x: 1}, -1)
    assert not lp_feasible(lp)
    assert not fourier_motzkin_feasible(lp)


def test_lp_with_equalities_and_free_variables():
    lp = RationalLP(exact=True)
    a, b = lp.add_var("a"), lp.add_var("b")
    lp.add_eq({a: 1, b: 1}, Fraction(1, 3))
    lp.add_le({a: -1}, -2)
    res = lp_feasible(lp)
    assert res and res.point[a] + res.point[b] == Fraction(1, 3)
    assert fourier_motzkin_feasible(lp)


def test_parse_mode():
    assert isinstance(parse_mode("subspace"), SubspaceExact)
    assert parse_mode("sphere:16,3") == SampledSphere(16, 3)
    with pytest.raises(ValueError):
        parse_mode("everything")


def test_disk_direction_certificate():
    d = certify_direction_geometric(disk([-1, 0]), [0, 0.5])
    assert isinstance(d, DirectionCertificate)
    assert d.alpha == pytest.approx(1.0)
    assert np.allclose(d.lam, [-1, 1, 0])
    assert d.value == pytest.approx(0.25)


def test_rotated_disk_is_not_certified():
    p = disk([0, -1])
    assert isinstance(certify_direction_geometric(p, [-1, 0]), NotFound)
    assert certify_socp(p, SampledSphere(16, 0)).verdict is Verdict.NOT_CERTIFIED


def test_fixed_and_supplied_multipliers():
    p = disk([-1, 0])
    assert isinstance(certify_direction_geometric(p, [0, 1], FixedMultiplier(1.0, (-1, 1, 0))), DirectionCertificate)
    assert isinstance(certify_direction_geometric(p, [0, 1], FixedMultiplier(1.0, (-2, 2, 0))), NotFound)
    got = certify_direction_geometric(p, [0, 1], SuppliedList(((1.0, (-2, 2, 0)), (1.0, (-1, 1, 0)))))
    assert isinstance(got, DirectionCertificate)


def test_certificate_scaling():
    d = certify_direction_geometric(disk([-1, 0]), [0, 1])
    s = d.scaled(3.0)
    assert s.alpha == pytest.approx(3 * d.alpha)
    assert np.allclose(s.lam, 3 * np.asarray(d.lam))
    assert s.value == pytest.approx(3 * d.value)
    assert s.normalized_value == pytest.approx(d.normalized_value)


def test_disk_fixture_certified(fixture):
    cert = certify(fixture("socp_disk"), SampledSphere(64, 7))
    assert cert.verdict is Verdict.CERTIFIED_ON_DIRECTIONS
    assert cert.value_min > 0 and cert.growth_eps == pytest.approx(cert.value_min / 4)


def test_disjunctive_toy_multiplier(fixture):
    cert = certify(fixture("disjunctive_toy"), SampledSphere(64, 7))
    assert cert.verdict is Verdict.CERTIFIED_ON_DIRECTIONS
    d = cert.directions[0]
    assert d.alpha == 1.0 and np.allclose(d.lam, [0, 2])


def test_disjunctive_toy_subspace_proof(fixture):
    cert = certify(fixture("disjunctive_toy"), SubspaceExact())
    assert cert.verdict is Verdict.CERTIFIED_SUBSPACE_EXACT
    assert cert.subspace["min_eigenvalue"] == pytest.approx(2.0)


def test_composite_counterexample_has_witness(fixture):
    for mode in (SubspaceExact(), SampledSphere(8, 0), DirectionsList(((1.0,),))):
        cert = certify_composite(fixture("flat_composite"), mode)
        assert cert.verdict is Verdict.NOT_CERTIFIED
        assert np.allclose(np.abs(cert.witness), [1.0])


def test_composite_has_no_objective_multiplier_knob():
    params = inspect.signature(certify_composite).parameters
    assert "alpha" not in params
    assert set(params) == {"p", "direction_source", "exact"}


def test_sparse_instance_is_vacuous(fixture):
    cert = certify(fixture("sparse"), exact=True)
    assert cert.verdict is Verdict.CERTIFIED_SUBSPACE_EXACT
    assert cert.subspace["dimension"] == 0


def test_zero_count_counterexample(fixture):
    assert certify(fixture("l0_counterexample")).verdict is Verdict.NOT_CERTIFIED


def test_halfline_critical_cone_is_trivial(fixture):
    cert = certify(fixture("halfline"))
    assert cert.verdict is Verdict.CERTIFIED_SUBSPACE_EXACT


def test_structured_disk_matches_preimage_form(fixture):
    cert = certify(fixture("structured_disk"), SampledSphere(8, 0))
    geo = certify(disk([-1, 0]), SampledSphere(8, 0))
    assert cert.verdict is Verdict.CERTIFIED_ON_DIRECTIONS
    assert cert.directions[0].value == pytest.approx(geo.directions[0].value)


def test_structured_needs_candidates():
    G = AffineMap([[0, 0], [1, 0], [0, 1]], [1, 0, 0])
    with pytest.raises(MissingCandidates):
        ProblemInstance(
            "structured", PolyForm.affine([-1, 0]), AffineMap(np.eye(2)), [1, 0], H=AffineMap(np.eye(2)), G=G, D=SecondOrderCone(3)
        )


def test_infeasible_base_point():
    with pytest.raises(InfeasibleBasePoint):
        ProblemInstance("geometric", PolyForm.affine([1.0]), AffineMap([[1.0]]), [1.0], C=Polyhedron.nonpositive())


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        ProblemInstance("geometric", PolyForm.affine([1.0, 0.0]), AffineMap([[1.0]]), [0.0], C=Polyhedron.nonpositive())


def test_curvature_theta_without_curvature_is_zero():
    D = Polyhedron.nonpositive(2)
    G = AffineMap(np.eye(2))
    val = curvature_theta(np.zeros(2), [-1, 0], [0, 0], [0, 1], G, G, D)
    assert val == 0.0
    assert curvature_theta(np.zeros(2), [1, 0], [0, 0], [0, 1], G, G, D) == math.inf


@pytest.mark.parametrize("y3", [1.0, -0.5])
def test_curvature_theta_graph_encoding(y3):
    # D = {(a, b): b = a**2} x {(c, d): c = d}, G copies the middle coordinate,
    # H keeps the outer two; the only curvature is the parabola's.
    parabola = PolyForm("cubic", 2, terms=[(1.0, (0, 1)), (-1.0, (2, 0))])
    D = Product((PreImage(parabola, Polyhedron(E=[[1]], e=[0], dim=1)), Polyhedron(E=[[-1, 1]], e=[0])))
    G = AffineMap([[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]])
    H = AffineMap([[1, 0, 0], [0, 0, 1]])
    val = curvature_theta(np.zeros(3), [1, 0, 0], [0, y3], [0, y3, -y3, y3], G, H, D)
    assert val == pytest.approx(-2 * y3)
