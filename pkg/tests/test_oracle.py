import numpy as np
import pytest

from curvkit.core import PolyForm
from curvkit.sets import Box, Polyhedron, PreImage, SecondOrderCone
from curvkit.oracle import (
    Classification,
    GrowthVerdict,
    SampleGrid,
    circle_projection,
    dir_neighborhood_member,
    estimate_d,
    estimate_d2,
    from_callable,
    projection_alignment_probe,
    sequence_ratio_probe,
    sphere_center_sequence,
    verify_essential_min,
    verify_quadratic_growth,
)
from curvkit.subderiv import EuclNorm, Indicator, L0, Smooth, SumSmooth, VecMax

GRID = SampleGrid(dir_decay=0.6)
HALFLINE = Polyhedron.nonpositive()


def test_grid_validation():
    with pytest.raises(ValueError):
        SampleGrid(rho=1.5)
    with pytest.raises(ValueError):
        SampleGrid(levels=0)
    with pytest.raises(ValueError):
        SampleGrid(dir_radius0=1e-6, dir_decay=0.1, levels=30)


def test_smooth_quadratic_converges():
    f = Smooth(PolyForm("quadratic", 2, Q=[[2, 1], [1, 3]]))
    est = estimate_d2(f, [0, 0], [0, 0], [1, -1], GRID)
    assert est.classification is Classification.CONVERGES_TO
    assert est.value == pytest.approx(3.0, abs=1e-2)


def test_smooth_with_wrong_multiplier_diverges_down():
    f = Smooth(PolyForm("quadratic", 1, Q=[[1.0]]))
    assert estimate_d2(f, [0], [1], [1]).classification is Classification.DIVERGES_DOWN


def test_halfline_indicator_diverges_up_when_leaving():
    est = estimate_d2(Indicator(HALFLINE), [0], [0], [1])
    assert est.classification is Classification.DIVERGES_UP


def test_halfline_indicator_zero_on_critical_direction():
    est = estimate_d2(Indicator(HALFLINE), [0], [1], [0], GRID)
    assert est.classification is Classification.CONVERGES_TO
    assert abs(est.value) <= 1e-2


def test_norm_first_subderivative_at_origin():
    est = estimate_d(EuclNorm(2), [0, 0], [3, 4], GRID)
    assert est.value == pytest.approx(5.0, abs=5e-2)


def test_vecmax_and_l0_match_closed_forms():
    est = estimate_d2(VecMax(2), [0, 0], [0, 1], [1, 2], GRID)
    assert abs(est.value) <= 1e-2
    est = estimate_d2(L0(2), [1, 0], [0, 3], [0, 0], GRID)
    assert abs(est.value) <= 1e-2


def test_soc_boundary_curvature():
    est = estimate_d2(Indicator(SecondOrderCone(3)), [1, 1, 0], [-1, 1, 0], [1, 1, 1], GRID)
    assert est.classification is Classification.CONVERGES_TO
    assert est.value == pytest.approx(1.0, rel=5e-2)


def test_disc_preimage_curvature():
    disc = PreImage(PolyForm("quadratic", 2, Q=2 * np.eye(2), c=-1.0), HALFLINE)
    est = estimate_d2(Indicator(disc), [1, 0], [2, 0], [0, 1], GRID)
    assert est.value == pytest.approx(2.0, rel=5e-2)


def test_from_callable_scalar_function():
    ev = from_callable(lambda z: abs(z[0]), 1, vectorized=False)
    est = estimate_d(ev, [0], [-2], GRID)
    assert est.value == pytest.approx(2.0, abs=1e-2)


def test_oracle_is_deterministic_for_a_seed():
    h = Indicator(Box([0, 0], [1, 1]))
    a = estimate_d2(h, [1, 1], [1, 0], [0, -1], SampleGrid(seed=5))
    b = estimate_d2(h, [1, 1], [1, 0], [0, -1], SampleGrid(seed=5))
    assert a.level_minima == b.level_minima


def test_growth_holds_for_strict_minimum():
    h = Smooth(PolyForm("quadratic", 2, Q=np.eye(2)))
    rep = verify_quadratic_growth(h, [0, 0], 0.4, 1e-1, 5000)
    assert rep.verdict is GrowthVerdict.HOLDS


def test_growth_fails_for_quartic():
    h = from_callable(lambda Z: Z[:, 0] ** 4, 1)
    rep = verify_quadratic_growth(h, [0], 1e-3, 1e-2, 5000)
    assert rep.verdict is GrowthVerdict.FAILS_AT
    assert rep.witness is not None and rep.violation < 0


def test_growth_rejects_bad_parameters():
    with pytest.raises(ValueError):
        verify_quadratic_growth(EuclNorm(1), [0], 0.0, 1e-2, 10)


def test_essential_min_on_disc():
    # min -x1 on the unit disc at (1, 0).
    f0 = PolyForm.affine([-1.0, 0.0], 0.0)
    F = PolyForm("quadratic", 2, Q=2 * np.eye(2), c=-1.0)
    rep = verify_essential_min(f0, F, HALFLINE, [1, 0], 0.1, 1e-2, 5000)
    assert rep.verdict is GrowthVerdict.HOLDS
    rotated = PolyForm.affine([0.0, -1.0], 0.0)
    rep = verify_essential_min(rotated, F, HALFLINE, [1, 0], 0.1, 1e-2, 5000)
    assert rep.verdict is GrowthVerdict.FAILS_AT


def test_directional_neighborhood():
    assert dir_neighborhood_member([1, 0], 0.5, 0.1, [0.1, 0.005])
    assert not dir_neighborhood_member([1, 0], 0.5, 0.1, [0.1, 0.1])
    assert not dir_neighborhood_member([1, 0], 0.05, 0.1, [0.1, 0.0])
    with pytest.raises(ValueError):
        dir_neighborhood_member([1, 0], 0.0, 0.1, [0.1, 0])


def test_projection_probe_aligns_on_polyhedron():
    probe = projection_alignment_probe(Polyhedron.nonnegative(2), [0, 0], [1, 1])
    assert probe.final_residual <= 1e-12
    # Leaving the orthant, the projection keeps only the first component.
    probe = projection_alignment_probe(Polyhedron.nonnegative(2), [0, 0], [1, -1])
    assert probe.final_residual == pytest.approx(1 / np.sqrt(2))
    assert probe.max_ratio <= 1.0 + 1e-12


def test_sphere_center_ratios_blow_up():
    ratios = sequence_ratio_probe(circle_projection, [0, 0], [1, 0], sphere_center_sequence(12))
    assert ratios[-1] > 10
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
