"""
Tests for utils.measure: measured samples, ball masses, doubling constants and the
sample-consistent-with-doubling verdict.
"""
import numpy as np
import pytest

from core.errors import PreconditionError, StructuralError
from utils.measure import (MeasuredSpace, ball_measure, cantor_ball_table, doubling_constant, doubling_verdict,
                           invariant_doubling_verdict, trend_slope)
from utils.metric import DistanceMatrix
from utils.spaces import ProductMetricSpec, cantor_space, product_metric, subgroup_distance_row, torus_grid


def line_space(xs, weights=None):
    x = np.asarray(xs, dtype=float)
    matrix = DistanceMatrix(np.abs(x[:, None] - x[None, :]))
    return MeasuredSpace.uniform(matrix) if weights is None else MeasuredSpace(matrix, weights)


@pytest.fixture(scope="module")
def cantor8():
    return cantor_space(8)


def test_measured_space_rejects_bad_weights():
    matrix = DistanceMatrix([[0, 1], [1, 0]])
    with pytest.raises(StructuralError):
        MeasuredSpace(matrix, [1.0])
    with pytest.raises(StructuralError):
        MeasuredSpace(matrix, [1.0, -0.5])
    with pytest.raises(StructuralError):
        MeasuredSpace(matrix, [0.0, 0.0])


def test_support_and_scaling():
    s = line_space([0, 1, 2], weights=[0.0, 2.0, 1.0])
    assert s.support.tolist() == [1, 2]
    assert s.scaled(2.0).total_mass == 6.0


def test_ball_measure_is_strict():
    s = line_space([0, 1, 2], weights=[1.0, 2.0, 4.0])
    assert ball_measure(s, 0, 1.0) == 1.0
    assert ball_measure(s, 1, 1.5) == 7.0


def test_counting_measure_on_dyadic_points():
    """mu(B(1, 1/2)) = 1 while B(1, 1) holds every point of {2^-k : 0 <= k <= K}"""
    K = 6
    s = line_space([2.0 ** -k for k in range(K + 1)], weights=np.ones(K + 1))
    assert doubling_constant(s, [2.0 ** -i for i in range(1, K + 1)]) == K + 1


def test_doubling_constant_is_scale_free():
    s = line_space(np.arange(20), weights=np.linspace(1, 3, 20))
    radii = [1.5, 3.0, 6.0]
    assert doubling_constant(s.scaled(7.5), radii) == pytest.approx(doubling_constant(s, radii))


def test_zero_mass_ball_is_reported():
    s = line_space([0, 1, 2], weights=[0.0, 1.0, 1.0])
    with pytest.raises(PreconditionError, match="zero mass"):
        doubling_constant(s, [0.5], centers=[0])
    with pytest.raises(PreconditionError):
        doubling_constant(s, [0.0])


def test_verdict_centers_default_to_the_support():
    s = line_space([0, 1, 2, 3], weights=[0.0, 1.0, 1.0, 1.0])
    report = doubling_verdict(s, [1, 2])
    assert report.ratios == [1.0, 1.0]


def test_uniform_interval_is_consistent_with_doubling():
    s = line_space(np.arange(257) / 256)
    report = doubling_verdict(s, range(1, 7))
    assert report.consistent_with_doubling
    assert report.max_ratio < 3
    assert report.bound == "lower"


def test_trend_slope_needs_two_levels():
    assert trend_slope([3], [2.0]) is None
    assert trend_slope([1, 2, 3], [1.0, np.e, np.e ** 2]) == pytest.approx(1.0)
    report = doubling_verdict(line_space(np.arange(9) / 8), [2])
    assert report.trend_slope is None
    assert report.consistent_with_doubling


def test_torus_weighted_sum_is_flagged():
    row = subgroup_distance_row(4, 4, ProductMetricSpec(kind="weighted_sum"))
    report = invariant_doubling_verdict(row, range(1, 9))
    assert report.ratios[0] == 1.0
    assert report.ratios[-1] == 3.0
    assert report.trend_slope > 0.1
    assert not report.consistent_with_doubling


def test_invariant_sweep_matches_the_dense_sweep():
    spec = ProductMetricSpec(kind="weighted_sum")
    grid = torus_grid(2, 3)
    dense = doubling_verdict(MeasuredSpace.uniform(product_metric(grid, spec)), range(1, 6))
    invariant = invariant_doubling_verdict(subgroup_distance_row(2, 3, spec), range(1, 6))
    assert dense.ratios == pytest.approx(invariant.ratios)


def test_invariant_row_needs_the_identity():
    with pytest.raises(StructuralError):
        invariant_doubling_verdict([0.5, 0.25], [1, 2])


def test_cantor_ball_masses_are_exact(cantor8):
    table = cantor_ball_table(cantor8, 8)
    assert [row.n for row in table] == list(range(1, 8))
    assert all(row.exact for row in table)
    assert table[0].max_mass == 0.5


def test_cantor_measure_is_doubling(cantor8):
    assert doubling_constant(cantor8, [3.0 ** -k for k in range(1, 7)]) <= 8
    assert doubling_verdict(cantor8, range(1, 7)).consistent_with_doubling
