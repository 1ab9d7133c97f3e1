import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvkit.core import AffineMap, PolyForm
from curvkit.errors import AssumptionNotDeclared, MissingCandidates, PreconditionViolated
from curvkit.sets import Box, Polyhedron, PolyhedralUnion, PreImage, Product, SecondOrderCone, Ternary
from curvkit.subderiv import (
    BoundedValue,
    Compose,
    Dist,
    EuclNorm,
    Indicator,
    Kind,
    L0,
    Scaled,
    SeparableSum,
    Smooth,
    SumSmooth,
    VecMax,
    d2,
    d2_chain,
    d2_dist,
    d2_graph_indicator,
    d2_image,
    d2_indicator_polyunion,
    d2_indicator_product,
    d2_indicator_scalar_halfline,
    d2_indicator_soc,
    d2_marginal_finite,
    d2_preimage,
    proximal_subdiff_member,
    subderivative,
)

INF = math.inf
HALFLINE = Polyhedron.nonpositive()


def complementarity():
    return PolyhedralUnion(
        (
            Polyhedron(A=[[-1, 0]], b=[0], E=[[0, 1]], e=[0]),
            Polyhedron(A=[[0, -1]], b=[0], E=[[1, 0]], e=[0]),
        )
    )


def circle():
    return PolyForm("quadratic", 2, Q=2 * np.eye(2), c=-1.0)


def half_square():
    return PolyForm("quadratic", 1, Q=[[1.0]])


def test_bounded_value_normalizes_pinned_infinities():
    assert BoundedValue(INF, Kind.LOWER_BOUND).kind is Kind.EXACT
    assert BoundedValue(-INF, Kind.UPPER_BOUND).kind is Kind.EXACT
    assert BoundedValue(-INF, Kind.LOWER_BOUND).kind is Kind.LOWER_BOUND
    with pytest.raises(ValueError):
        BoundedValue(float("nan"))


def test_prenormal_verdict():
    assert BoundedValue(0.0).prenormal_verdict() is Ternary.YES
    assert BoundedValue(-INF).prenormal_verdict() is Ternary.NO
    assert BoundedValue(-INF, Kind.LOWER_BOUND).prenormal_verdict() is Ternary.UNKNOWN
    assert BoundedValue(1.0, Kind.UPPER_BOUND).prenormal_verdict() is Ternary.UNKNOWN


def test_first_subderivatives():
    val = subderivative(VecMax(2), [0, 0], [1, 2])
    assert (val.value, val.kind) == (2.0, Kind.EXACT)
    assert subderivative(Indicator(HALFLINE), [0], [1]).value == INF
    assert subderivative(L0(1), [0], [1]).value == INF
    assert subderivative(EuclNorm(2), [0, 0], [3, 4]).value == pytest.approx(5)
    assert subderivative(Dist(HALFLINE), [0], [2]).value == pytest.approx(2)


@pytest.mark.parametrize(
    "zs,w,expected", [(1, -1, INF), (1, 0, 0.0), (-1, -1, -INF), (0, 3, INF), (0, -2, 0.0), (2, 1, INF)]
)
def test_halfline_table(zs, w, expected):
    assert d2_indicator_scalar_halfline(zs, w) == expected
    assert d2(Indicator(HALFLINE), [0], [zs], [w]).value == expected


def test_smooth_second_subderivative_is_hessian_form():
    f = PolyForm("quadratic", 2, Q=[[2, 1], [1, 3]], a=[1, -1])
    z = np.array([0.5, 2.0])
    val = d2(Smooth(f), z, f.gradient(z), [1.0, -2.0])
    assert val.exact and val.value == pytest.approx(2 - 4 + 12)


def test_smooth_with_wrong_multiplier():
    f = Smooth(half_square())
    assert d2(f, [0], [1], [1]).value == -INF
    assert d2(f, [0], [1], [-1]).value == INF


def test_norm_at_origin():
    w = np.array([3.0, 4.0])
    val = d2(EuclNorm(2), [0, 0], w / 5, w)
    assert val.exact and val.value == 0.0


def test_norm_away_from_origin_is_tangential_curvature():
    z = np.array([3.0, 4.0])
    val = d2(EuclNorm(2), z, z / 5, [4.0, -3.0])
    assert val.value == pytest.approx(25 / 5)


def test_vecmax_multiplier_in_simplex():
    val = d2(VecMax(2), [0, 0], [0, 1], [1, 2])
    assert val.exact and val.value == 0.0


def test_vecmax_multiplier_off_simplex():
    assert d2(VecMax(2), [0, 0], [2, -1], [1, 1]).value == -INF
    assert d2(VecMax(2), [0, 0], [1, 0], [2, 1]).value == 0.0
    # First subderivative 2 exceeds the pairing 1.
    assert d2(VecMax(2), [0, 0], [1, 0], [1, 2]).value == INF


def test_l0_cases():
    assert d2(L0(2), [1, 0], [0, 5], [1, 0]).value == 0.0
    assert d2(L0(2), [1, 0], [0, 5], [0, 1]).value == INF
    assert d2(L0(2), [1, 0], [0, 3], [0, 0]).value == 0.0
    assert d2(L0(2), [1, 0], [1, 0], [0, 0]).value == -INF
    assert d2(L0(2), [1, 0], [1, 0], [2, 0]).value == -INF


def test_l0_support_multiplier_is_minus_infinity_on_orthogonal_directions():
    # Pairing zero but the multiplier is nonzero on the support: -inf, not 0.
    val = d2(L0(2), [1, 1], [1, -1], [1, 1])
    assert val.exact and val.value == -INF


def test_polyunion_examples():
    U = complementarity()
    assert d2_indicator_polyunion(PolyhedralUnion((HALFLINE,)), [0], [1], [0]).value == 0.0
    val = d2_indicator_polyunion(U, [0, 0], [0, 0], [1, 0])
    assert val.exact and val.value == 0.0
    val = d2_indicator_polyunion(U, [0, 0], [0, 0], [1, 1])
    assert val.exact and val.value == INF


def test_product_examples():
    assert d2_indicator_product([HALFLINE, HALFLINE], [0, 0], [1, 1], [0, 0]).value == 0.0
    val = d2_indicator_product([HALFLINE, SecondOrderCone(3)], [0, 2, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0])
    assert val.value == 0.0
    assert d2_indicator_product([HALFLINE, SecondOrderCone(3)], [0, 2, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]).value == INF


def test_soc_interior_and_apex():
    val = d2_indicator_soc(3, [2, 0, 0], [0, 0, 0], [5, -1, 7])
    assert val.exact and val.value == 0.0
    val = d2_indicator_soc(3, [0, 0, 0], [0, 0, 0], [1, 0, 0])
    assert val.exact and val.value == 0.0


def test_soc_boundary_value():
    val = d2_indicator_soc(3, [1, 1, 0], [-1, 1, 0], [1, 1, 1])
    assert val.exact and val.value == pytest.approx(1.0)


def test_soc_boundary_value_scales_with_multiplier_norm():
    y = np.array([2.0, 0.0, 2.0])
    zs = 3 * np.array([-1.0, 0.0, 1.0])
    v = np.array([0.5, 4.0, 0.5])
    expected = np.linalg.norm(zs) / np.linalg.norm(y) * (v[1:] @ v[1:] - v[0] ** 2)
    assert d2_indicator_soc(3, y, zs, v).value == pytest.approx(expected)


def test_dist_lower_estimate():
    val = d2_dist(SecondOrderCone(3), [1, 1, 0], np.array([-1, 1, 0]) / math.sqrt(2), [1, 1, 0])
    assert val.kind is Kind.LOWER_BOUND and val.value == pytest.approx(0.0)


def test_dist_on_halfline_with_positive_pairing_is_infinite():
    # z* = 1, w = -1 pairs negatively with the multiplier, so the indicator
    # value is the top row of the half-line table.
    val = d2_dist(HALFLINE, [0], [1], [-1])
    assert val.value == INF


def test_dist_rejects_large_multiplier():
    with pytest.raises(PreconditionViolated):
        d2_dist(HALFLINE, [0], [2], [-1])
    assert d2(Dist(HALFLINE), [0], [2], [1]).value == -INF
    assert d2(Dist(HALFLINE), [0], [2], [-1]).value == INF


def test_chain_rule_half_square():
    g = Smooth(PolyForm.affine([1.0], 0.0))
    val = d2_chain(g, half_square(), [0.0], [0.0], [3.0])
    assert val.value == pytest.approx(9.0)
    smooth = d2(Smooth(half_square()), [0.0], [0.0], [3.0])
    assert smooth.value == pytest.approx(val.value)


def test_chain_rule_with_identity_jacobian_is_exact():
    F = AffineMap(np.eye(2), np.zeros(2))
    val = d2_chain(VecMax(2), F, [0, 0], [0, 1], [1, 2])
    assert val.exact and val.value == 0.0


def test_chain_rule_inconsistent_multiplier():
    F = AffineMap([[1.0], [1.0]], [0.0, 0.0])
    val = d2_chain(VecMax(2), AffineMap([[0.0], [0.0]], [0.0, 0.0]), [0.0], [1.0], [0.0])
    assert val.value == -INF
    assert d2_chain(VecMax(2), F, [0.0], [1.0], [0.0]).value == 0.0


def test_preimage_disc():
    val = d2_preimage(HALFLINE, circle(), [1, 0], [2, 0], [0, 1])
    assert val.exact and val.value == pytest.approx(2.0)
    assert d2(Indicator(PreImage(circle(), HALFLINE)), [1, 0], [2, 0], [0, 1]).value == pytest.approx(2.0)


def test_preimage_leaving_direction():
    val = d2_preimage(HALFLINE, circle(), [1, 0], [2, 0], [1, 0])
    assert val.exact and val.value == INF


def test_preimage_requires_feasible_point():
    with pytest.raises(PreconditionViolated):
        d2_preimage(HALFLINE, circle(), [2, 0], [2, 0], [0, 1])


def test_affine_preimage_of_polyhedron():
    F = AffineMap([[1.0, 1.0]], [0.0])
    assert d2_preimage(HALFLINE, F, [0, 0], [1, 1], [1, -1]).value == 0.0
    assert d2_preimage(HALFLINE, F, [0, 0], [1, 1], [1, 0]).value == INF


def test_image_rule_needs_declarations():
    G = AffineMap([[1.0]], [0.0])
    with pytest.raises(AssumptionNotDeclared):
        d2_image(HALFLINE, G, [0], [1], [0], [([0], [0])])
    with pytest.raises(MissingCandidates):
        d2_image(HALFLINE, G, [0], [1], [0], [], inner_semicompact=True)


def test_image_of_halfline_under_square():
    # G(z) = z**2 / 2 maps (-inf, 0] onto [0, inf).
    G = half_square()
    val = d2_image(HALFLINE, G, [0.0], [-1.0], [0.0], [([0.0], [0.0])], inner_semicompact=True, inner_calm_star=True)
    assert val.kind is Kind.EXACT_OVER_CANDIDATES and val.value == 0.0
    val = d2_image(HALFLINE, G, [0.0], [-1.0], [0.0], [([0.0], [0.0])], inner_semicompact=True)
    assert val.kind is Kind.UPPER_BOUND


def test_image_negative_pairing_is_infinite():
    G = AffineMap([[1.0]], [0.0])
    assert d2_image(HALFLINE, G, [0.0], [1.0], [-1.0], [([0.0], None)], inner_semicompact=True).value == INF


def test_marginal_rule():
    # phi(x, y) = (x - y)**2 / 2 + y**2 / 2, minimized at y = x / 2.
    phi = Smooth(PolyForm("quadratic", 2, Q=[[1, -1], [-1, 2]]))
    val = d2_marginal_finite(phi, [0.0], [0.0], [2.0], [[0.0]], direction_grid=lambda y: [[0.0], [1.0], [2.0]])
    assert val.kind is Kind.UPPER_BOUND
    assert val.value == pytest.approx(2.0)
    with pytest.raises(MissingCandidates):
        d2_marginal_finite(phi, [0.0], [0.0], [1.0], [])


def test_graph_indicator():
    F = circle()
    x, y = np.array([1.0, 0.0]), F.value([1.0, 0.0])
    u = np.array([0.0, 1.0])
    val = d2_graph_indicator(F, x, y, [2.0, 0.0], [-1.0], u, F.jacobian(x) @ u)
    assert val.exact and val.value == pytest.approx(2.0)
    off = d2_graph_indicator(F, x, y, [2.0, 0.0], [-1.0], u, [1.0])
    assert off.kind is Kind.LOWER_BOUND


def test_sum_with_smooth_term():
    h = SumSmooth(half_square(), Indicator(HALFLINE))
    assert d2(h, [0.0], [1.0], [0.0]).value == 0.0
    assert d2(h, [0.0], [0.0], [-2.0]).value == pytest.approx(4.0)


def test_separable_sum_of_closed_forms_is_exact():
    h = SeparableSum((VecMax(2), L0(1)))
    val = d2(h, [0, 0, 1], [0, 1, 0], [1, 2, 5])
    assert val.exact and val.value == 0.0


def test_scaling_rule():
    base = d2(EuclNorm(2), [3, 4], [0.6, 0.8], [4, -3])
    scaled = d2(Scaled(2.0, EuclNorm(2)), [3, 4], [1.2, 1.6], [4, -3])
    assert scaled.value == pytest.approx(2 * base.value)


def test_compose_with_full_row_rank():
    h = Compose(Indicator(HALFLINE), circle())
    assert d2(h, [1, 0], [2, 0], [0, 1]).value == pytest.approx(2.0)


def test_box_indicator_at_corner():
    B = Box([0, 0], [1, 1])
    assert d2(Indicator(B), [1, 1], [1, 0], [0, -1]).value == 0.0
    assert d2(Indicator(B), [1, 1], [1, 0], [-1, 0]).value == INF


def test_proximal_subdifferential_membership():
    h = Indicator(HALFLINE)
    assert proximal_subdiff_member(h, [0], [0], [1]) is Ternary.YES
    assert proximal_subdiff_member(h, [0], [-1], [-1]) is Ternary.NO
    assert proximal_subdiff_member(h, [0], [1], [1]) is Ternary.NO

finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(zs=st.lists(finite, min_size=3, max_size=3), w=st.lists(finite, min_size=3, max_size=3), alpha=st.floats(0.1, 10))
def test_indicator_value_is_positively_homogeneous_in_multiplier(zs, w, alpha):
    h = Indicator(Box([-1, -1, 0], [1, 0, 2]))
    z = np.array([1.0, 0.0, 0.0])
    base = d2(h, z, zs, w)
    scaled = d2(h, z, alpha * np.asarray(zs), w)
    assert scaled.kind is base.kind
    assert scaled.value == pytest.approx(alpha * base.value)
