import math

import pytest
from hypothesis import given, strategies as st

from junctionhjb import (
    INTERFACE_PLANE,
    JunctionPoint,
    JunctionShape,
    canonicalize,
    dist_to_interface,
    geodesic_distance,
    interface_point,
)
from junctionhjb.errors import InvalidPointError

coords = st.floats(-100, 100, allow_nan=False)
heights = st.floats(0, 100, allow_nan=False)
planes = st.integers(1, 5)
points = st.builds(JunctionPoint, planes, coords, heights)


def test_canonicalize_interface_point():
    p = canonicalize(JunctionPoint(3, 1.5, 0.0))
    assert p == interface_point(1.5)
    assert p.plane == INTERFACE_PLANE


def test_canonicalize_identity_off_interface():
    p = JunctionPoint(1, 0.0, 2.0)
    assert canonicalize(p) is p


def test_gluing_rule():
    a = JunctionPoint(2, -4.0, 0.0)
    b = JunctionPoint(5, -4.0, 0.0)
    assert a != b
    assert canonicalize(a) == canonicalize(b)


@given(points)
def test_canonicalize_idempotent(p):
    assert canonicalize(canonicalize(p)) == canonicalize(p)


def test_negative_xi_rejected():
    with pytest.raises(InvalidPointError):
        JunctionPoint(1, 0.0, -0.1)


def test_shape_requires_two_planes():
    with pytest.raises(InvalidPointError):
        JunctionShape(1)
    assert list(JunctionShape(3).planes) == [1, 2, 3]


def test_same_plane_distance():
    assert geodesic_distance(JunctionPoint(1, 0, 3), JunctionPoint(1, 4, 6)) == 5.0


def test_cross_plane_distance():
    assert geodesic_distance(JunctionPoint(1, 0, 1), JunctionPoint(2, 0, 2)) == 3.0


def test_interface_point_agrees_across_branches():
    x = JunctionPoint(1, 0, 3)
    y = JunctionPoint(2, 4, 0)
    assert geodesic_distance(x, y) == 5.0
    assert geodesic_distance(x, canonicalize(y)) == 5.0


def test_dist_to_interface():
    assert dist_to_interface(JunctionPoint(1, 7, 0.25)) == 0.25
    assert dist_to_interface(interface_point(3.0)) == 0.0
    assert dist_to_interface(JunctionPoint(2, -3, 9)) == 9.0


@given(points, points)
def test_symmetry(x, y):
    assert geodesic_distance(x, y) == geodesic_distance(y, x)


@given(points, points)
def test_zero_iff_canonically_equal(x, y):
    d = geodesic_distance(x, y)
    if canonicalize(x) == canonicalize(y):
        assert d == 0.0
    else:
        assert d > 0.0


@given(points, points, points)
def test_triangle_inequality(x, y, z):
    assert geodesic_distance(x, z) <= (
        geodesic_distance(x, y) + geodesic_distance(y, z) + 1e-12)


def brute_force_cross_distance(x, y, n=400_001):
    """Independent check: minimize |x-z| + |z-y| over a fine grid of interface points."""
    lo = min(x.x0, y.x0) - 1.0
    hi = max(x.x0, y.x0) + 1.0
    best = math.inf
    for k in range(n):
        z0 = lo + (hi - lo) * k / (n - 1)
        best = min(best, math.hypot(x.x0 - z0, x.xi) + math.hypot(y.x0 - z0, y.xi))
    return best


@pytest.mark.parametrize("x,y", [
    (JunctionPoint(1, 0.0, 1.0), JunctionPoint(2, 0.0, 2.0)),
    (JunctionPoint(1, -1.0, 0.5), JunctionPoint(3, 2.0, 1.5)),
    (JunctionPoint(2, 0.3, 2.0), JunctionPoint(1, -0.7, 0.1)),
])
def test_cross_plane_matches_brute_force(x, y):
    assert geodesic_distance(x, y) == pytest.approx(brute_force_cross_distance(x, y), abs=1e-9)
