import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdfractal import attractor, boxdim
from gdfractal.errors import EmptyCloud, InsufficientData
from gdfractal.model import Box, CondensationSet, Point, Polyline, Segment

UNIT = CondensationSet((Segment((0,), (1,)),))


def interval_cre(t, inv_delta, p_grid=256):
    """Closed form for [0,1]: N at mesh delta^p is floor(delta^-p) + 1."""
    best = 0.0
    for k in range(p_grid + 1):
        p = k / p_grid
        x = inv_delta ** p
        n = math.floor(x + 1e-9) + 1
        if n >= inv_delta ** (p * t) * (1 - 1e-12):
            best = p
    return best


def dense_count(a, b, delta, m=200_000):
    t = np.linspace(0, 1, m)[:, None]
    pts = np.asarray(a, float) + t * (np.asarray(b, float) - np.asarray(a, float))
    return boxdim.count_boxes(pts, delta)


def test_cantor_counts_are_powers_of_two(cantor):
    c = attractor.homogeneous_cloud(cantor, "v", 3.0 ** -8)
    for j in range(1, 9):
        assert boxdim.count_boxes(c, 3.0 ** -j) == 2 ** j


def test_boundary_points_snap():
    # 0.3/0.1 is 2.9999999999999996 in floats
    assert boxdim.cell_index([0.3], 0.1).tolist() == [3]


def test_empty_cloud():
    with pytest.raises(EmptyCloud):
        boxdim.count_boxes(np.empty((0, 1)), 0.1)


@pytest.mark.parametrize("prims,delta,expected", [
    ((Segment((0,), (1,)),), 1 / 8, 9),
    ((Segment((Fraction(1, 3),), (Fraction(2, 3),)),), 0.1, 4),
    ((Point((0.5,)),), 1e-6, 1),
    ((Point((0,)), Point((1,))), 0.5, 2),
    ((Box((0, 0), (1, 1)),), 0.25, 25),
    ((Segment((0, 0), (0, 1)),), 0.25, 5),
    ((Segment((0, 0), (1, 0)), Segment((0, 0), (0, 1))), 0.25, 9),
])
def test_analytic_counts(prims, delta, expected):
    assert boxdim.analytic_count(CondensationSet(prims), delta) == expected


@pytest.mark.parametrize("a,b,delta", [
    ((0.013, 0.021), (0.91, 0.47), 0.05),
    ((0.1, 0.9), (0.77, 0.12), 0.031),
    ((0.2, 0.2, 0.2), (0.71, 0.43, 0.95), 0.1),
])
def test_diagonal_segment_matches_dense_sampling(a, b, delta):
    c = CondensationSet((Segment(a, b),))
    assert boxdim.analytic_count(c, delta) == dense_count(a, b, delta)


def test_polyline_counts_union():
    pl = Polyline(((0, 0), (1, 0), (1, 1)))
    assert boxdim.analytic_count(CondensationSet((pl,)), 0.25) == 9


def test_many_boxes_enumerated():
    boxes = tuple(Box((i, 0), (i + 0.5, 0.5)) for i in range(14))
    assert boxdim.analytic_count(CondensationSet(boxes), 0.25) == 14 * 9


class TestEstimates:
    def test_exact_power_law(self):
        deltas = boxdim.dyadic_deltas(1, 10)
        series = boxdim.BoxCountSeries(deltas, tuple(int(round(d ** -1.5)) for d in deltas))
        est = boxdim.estimate_dims(series, 4)
        assert est.slope_global == pytest.approx(1.5, abs=0.01)
        assert est.slope_upper == pytest.approx(1.5, abs=0.01)

    def test_constant_series_has_zero_slope(self):
        series = boxdim.BoxCountSeries(boxdim.dyadic_deltas(1, 8), (1,) * 8)
        assert boxdim.estimate_dims(series).slope_global == 0

    def test_too_few_scales(self):
        series = boxdim.BoxCountSeries((0.5, 0.25, 0.125), (2, 4, 8))
        with pytest.raises(InsufficientData):
            boxdim.estimate_dims(series, 4)

    def test_non_decreasing_deltas_rejected(self):
        with pytest.raises(ValueError):
            boxdim.BoxCountSeries((0.25, 0.5), (4, 2))

    def test_cantor_triadic_slope(self, cantor):
        c = attractor.homogeneous_cloud(cantor, "v", 3.0 ** -10)
        deltas = [3.0 ** -k for k in range(2, 9)]
        est = boxdim.estimate_dims(boxdim.box_count_series(c, deltas))
        assert est.slope_global == pytest.approx(math.log(2) / math.log(3), abs=1e-9)


class TestCRE:
    def test_interval_t_two(self):
        assert boxdim.cre(UNIT, 2, 1 / 16) == interval_cre(2, 16) == 0.125

    def test_interval_half(self):
        assert boxdim.cre(UNIT, 0.5, 1 / 16) == 1.0

    @pytest.mark.parametrize("t", [0.3, 0.8, 1.2, 1.7])
    def test_interval_matches_closed_form(self, t):
        assert boxdim.cre(UNIT, t, 1 / 64) == interval_cre(t, 64)

    def test_pt_interval(self):
        assert boxdim.pt_estimate(UNIT, 0.5, boxdim.dyadic_deltas(4, 20)) >= 0.95

    def test_pt_finite_set(self):
        two = CondensationSet((Point((0,)), Point((1,))))
        # 2 >= delta^-p  iff  p <= log 2 / log(1/delta) = 1/20 at delta = 2^-20
        assert boxdim.pt_estimate(two, 1, boxdim.dyadic_deltas(4, 20)) == 12 / 256

    def test_coarse_grid_rejected(self):
        with pytest.raises(ValueError):
            boxdim.cre(UNIT, 1, 0.1, p_grid=16)


@settings(max_examples=30, deadline=None)
@given(t1=st.floats(0, 3), t2=st.floats(0, 3), k=st.integers(3, 12))
def test_cre_nonincreasing_in_t(t1, t2, k):
    lo, hi = sorted((t1, t2))
    assert boxdim.cre(UNIT, hi, 2.0 ** -k) <= boxdim.cre(UNIT, lo, 2.0 ** -k)


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=200),
       k=st.integers(0, 8))
def test_halving_mesh_bounds(pts, k):
    arr = np.array(pts)
    delta = 2.0 ** -k
    n1 = boxdim.count_boxes(arr, delta)
    n2 = boxdim.count_boxes(arr, delta / 2)
    assert n1 <= n2 <= 4 * n1
