import math
from fractions import Fraction

import numpy as np
import pytest

from curvkit.core import (
    AffineMap,
    FunctionMap,
    PolyForm,
    extreal,
    extreal_scale,
    extreal_sum,
    extreal_total,
    fd_check,
    smooth_eval2,
    tag,
    to_fraction,
)
from curvkit.errors import IndeterminateSum


def test_extreal_sum_absorbs_infinity():
    assert extreal_sum(2.0, math.inf) == math.inf
    assert extreal_sum(1.0, 2.0) == 3.0


def test_extreal_sum_rejects_mixed_infinities():
    with pytest.raises(IndeterminateSum):
        extreal_sum(math.inf, -math.inf)
    with pytest.raises(IndeterminateSum):
        extreal_total([1.0, math.inf, -math.inf])


def test_extreal_parsing_and_tags():
    assert extreal("+inf") == math.inf
    assert extreal("-inf") == -math.inf
    assert tag(-math.inf) != tag(math.inf) != tag(0.0)
    with pytest.raises(ValueError):
        extreal(float("nan"))


def test_extreal_scale_keeps_sign_of_infinity():
    assert extreal_scale(3.0, -math.inf) == -math.inf
    assert extreal_scale(0.5, 4.0) == 2.0
    with pytest.raises(ValueError):
        extreal_scale(0.0, 1.0)


def test_to_fraction_snaps_rounding_noise():
    assert to_fraction(0.1 + 0.2) == Fraction(3, 10)
    assert to_fraction(0.1 + 0.2, exact=True) != Fraction(3, 10)
    assert to_fraction("2/7") == Fraction(2, 7)


def test_smooth_eval2_half_square():
    f = PolyForm("quadratic", 1, Q=[[1.0]])
    val, jac, hess = smooth_eval2(f, [3.0])
    assert val.tolist() == [4.5]
    assert jac.tolist() == [[3.0]]
    assert hess.tolist() == [[[1.0]]]


def test_affine_map_has_zero_hessians():
    F = AffineMap([[1.0, 2.0], [0.0, -1.0]], [1.0, 0.5])
    _, jac, hess = smooth_eval2(F, [0.3, -2.0])
    assert np.array_equal(jac, F.A)
    assert not np.any(hess)


def test_circle_map_derivatives():
    f = PolyForm("quadratic", 2, Q=2 * np.eye(2), c=-1.0)
    val, jac, hess = smooth_eval2(f, [1.0, 0.0])
    assert val.tolist() == [0.0]
    assert jac.tolist() == [[2.0, 0.0]]
    assert hess[0].tolist() == [[2.0, 0.0], [0.0, 2.0]]


def test_cubic_polyform_matches_finite_differences():
    f = PolyForm("cubic", 2, terms=[(1.5, (2, 1)), (-2.0, (0, 3)), (0.5, (1, 0))], c=1.0)
    rep = fd_check(f, [[0.3, -0.7], [1.2, 0.4]], 1e-6)
    assert rep.passed, rep.failures


def test_fd_check_quadratic_is_tight():
    f = PolyForm("quadratic", 3, Q=[[2, 1, 0], [1, 3, 0], [0, 0, 1]], a=[1, -1, 0])
    rep = fd_check(f, [[0.1, 0.2, 0.3], [-1.0, 2.0, 0.5]], 1e-5)
    assert rep.passed
    assert rep.max_error <= 1e-9


def test_fd_check_names_a_wrong_jacobian():
    f = FunctionMap(
        1,
        1,
        lambda x: np.array([x[0] ** 2]),
        lambda x: np.array([[3.0 * x[0]]]),
        lambda x: np.array([[[2.0]]]),
    )
    rep = fd_check(f, [[1.0]], 1e-4, names=["bad-jacobian"])
    assert not rep.passed
    assert rep.failures[0].name == "bad-jacobian"


def test_fd_check_sine():
    f = FunctionMap(
        1,
        1,
        lambda x: np.sin(x),
        lambda x: np.array([[np.cos(x[0])]]),
        lambda x: np.array([[[-np.sin(x[0])]]]),
    )
    assert fd_check(f, [[0.7]], 1e-4).passed
