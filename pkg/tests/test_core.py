import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgemigrate.core import (BoundaryPoint, BoundingBox, InvalidIntervalError,
                              RequestInterval, SlidingWindow, as_array, box_intersection,
                              contains, interval_distance_sq, points_from)

unit = st.floats(0.0, 1.0)


@st.composite
def intervals(draw):
    a, b = draw(unit), draw(unit)
    return RequestInterval(min(a, b), max(a, b))


@st.composite
def boxes(draw):
    x = sorted([draw(st.floats(-1, 2)), draw(st.floats(-1, 2))])
    y = sorted([draw(st.floats(-1, 2)), draw(st.floats(-1, 2))])
    return BoundingBox(x[0], y[0], x[1], y[1])


def test_interval_validation():
    RequestInterval(0.0, 0.0)
    RequestInterval(0.0, 1.0)
    with pytest.raises(InvalidIntervalError):
        RequestInterval(0.6, 0.5)
    with pytest.raises(InvalidIntervalError):
        RequestInterval(-0.1, 0.5)
    with pytest.raises(InvalidIntervalError):
        RequestInterval(0.1, 1.5)
    with pytest.raises(InvalidIntervalError):
        RequestInterval(math.nan, 0.5)


def test_interval_point_roundtrip():
    iv = RequestInterval(0.2, 0.7)
    assert tuple(iv.as_point()) == (0.2, 0.7)
    assert iv.width == pytest.approx(0.5)
    with pytest.raises(InvalidIntervalError):
        BoundaryPoint(0.8, 0.1)


def test_contains_examples():
    assert contains(RequestInterval(0.2, 0.6), RequestInterval(0.3, 0.5))
    assert contains(RequestInterval(0.2, 0.6), RequestInterval(0.2, 0.6))
    assert not contains(RequestInterval(0.2, 0.6), RequestInterval(0.1, 0.5))


@given(intervals(), intervals(), intervals())
def test_contains_is_a_partial_order(a, b, c):
    assert contains(a, a)
    if contains(a, b) and contains(b, c):
        assert contains(a, c)
    if contains(a, b) and contains(b, a):
        assert a == b


@given(intervals(), intervals())
def test_distance_symmetric_and_zero_on_equal(a, b):
    assert interval_distance_sq(a, b) == interval_distance_sq(b, a)
    assert interval_distance_sq(a, a) == 0.0
    assert interval_distance_sq(a, b) >= 0.0


def test_box_intersection_examples():
    a = BoundingBox(0.2, 0.5, 0.4, 0.7)
    b = BoundingBox(0.3, 0.6, 0.5, 0.8)
    assert box_intersection(a, b) == BoundingBox(0.3, 0.6, 0.4, 0.7)
    assert box_intersection(a, BoundingBox(0.5, 0.5, 0.6, 0.6)) is None
    # touching edges give a degenerate, non-empty box
    assert box_intersection(a, BoundingBox(0.4, 0.7, 0.6, 0.9)) == BoundingBox(0.4, 0.7, 0.4, 0.7)


@given(boxes(), boxes())
def test_box_intersection_properties(a, b):
    i = box_intersection(a, b)
    assert i == box_intersection(b, a)
    if i is not None:
        assert a.contains_box(i) and b.contains_box(i)
    assert box_intersection(a, a) == a


def test_box_corners_may_leave_feasible_half_plane():
    box = BoundingBox(0.5, 0.2, 0.9, 0.6)
    assert box.min_corner == (0.5, 0.2)
    assert box.area == pytest.approx(0.16)


def test_box_around():
    assert BoundingBox.around(np.empty((0, 2))) is None
    box = BoundingBox.around([(0.1, 0.5), (0.3, 0.4), (0.2, 0.9)])
    assert box == BoundingBox(0.1, 0.4, 0.3, 0.9)


def test_as_array_accepts_objects_and_pairs():
    pts = points_from([(0.1, 0.2), (0.3, 0.9)])
    assert as_array(pts).tolist() == [[0.1, 0.2], [0.3, 0.9]]
    assert as_array([RequestInterval(0.1, 0.2)]).shape == (1, 2)
    assert as_array([]).shape == (0, 2)


def test_sliding_window_eviction_order():
    w = SlidingWindow(3)
    pts = points_from([(0.1 * i, 0.1 * i + 0.05) for i in range(5)])
    evicted = [w.push(t, p, tag=t) for t, p in enumerate(pts)]
    assert evicted[:3] == [None, None, None]
    assert evicted[3][0] == 0 and evicted[4][0] == 1
    assert w.times() == [2, 3, 4]
    assert len(w) == 3
    assert w.array().shape == (3, 2)


def test_sliding_window_rejects_non_increasing_time():
    w = SlidingWindow(2)
    w.push(5, BoundaryPoint(0.1, 0.2))
    with pytest.raises(ValueError):
        w.push(5, BoundaryPoint(0.1, 0.2))
    with pytest.raises(ValueError):
        SlidingWindow(0)


@given(st.integers(1, 20), st.integers(0, 60))
def test_sliding_window_keeps_latest(capacity, pushes):
    w = SlidingWindow(capacity)
    for t in range(pushes):
        w.push(t, BoundaryPoint(0.0, 0.0))
    assert w.times() == list(range(max(0, pushes - capacity), pushes))
