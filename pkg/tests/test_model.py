import math

import pytest
from hypothesis import given, strategies as st

from mobiliscope.model import (
    DEFAULT_REFINEMENT,
    ActivityClass,
    DomainError,
    EARTH_RADIUS_M,
    RefinedMode,
    Zone,
    haversine_m,
    point_in_zone,
    zones_overlap,
)

UNIT_SQUARE = Zone("sq", ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)))


def test_haversine_identity():
    assert haversine_m((41.0, 2.0), (41.0, 2.0)) == 0.0


def test_haversine_one_degree_equator():
    # Analytic arc: pi * R / 180 along the equator.
    expected = math.pi * EARTH_RADIUS_M / 180.0
    assert haversine_m((0.0, 0.0), (0.0, 1.0)) == pytest.approx(expected, abs=0.1)
    assert haversine_m((0.0, 0.0), (0.0, 1.0)) == pytest.approx(111_194.9, abs=0.1)


def test_haversine_milli_degree():
    expected = math.pi * EARTH_RADIUS_M / 180.0 * 0.001
    assert haversine_m((0.0, 0.0), (0.001, 0.0)) == pytest.approx(expected, abs=0.01)


def test_haversine_out_of_range():
    with pytest.raises(DomainError):
        haversine_m((95.0, 0.0), (0.0, 0.0))
    with pytest.raises(DomainError):
        haversine_m((0.0, 0.0), (0.0, 181.0))


coords = st.tuples(
    st.floats(min_value=-80, max_value=80),
    st.floats(min_value=-179, max_value=179),
)


@given(coords, coords)
def test_haversine_symmetric_nonnegative(a, b):
    d1 = haversine_m(a, b)
    d2 = haversine_m(b, a)
    assert d1 >= 0
    assert d1 == pytest.approx(d2, rel=1e-12, abs=1e-9)


@given(coords, coords, coords)
def test_haversine_triangle_inequality(a, b, c):
    ab = haversine_m(a, b)
    bc = haversine_m(b, c)
    ac = haversine_m(a, c)
    assert ac <= ab + bc + 1e-6 * max(1.0, ab + bc)


def _winding_number_inside(p, zone):
    # Independent oracle: nonzero winding number, with explicit edge check.
    x, y = p
    poly = zone.polygon
    wn = 0
    for a, b in zip(poly, poly[1:]):
        cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])
        if cross == 0.0:
            if min(a[0], b[0]) <= x <= max(a[0], b[0]) and min(a[1], b[1]) <= y <= max(a[1], b[1]):
                return True
        if a[1] <= y:
            if b[1] > y and cross > 0:
                wn += 1
        elif b[1] <= y and cross < 0:
            wn -= 1
    return wn != 0


def test_point_in_zone_interior():
    assert point_in_zone((0.5, 0.5), UNIT_SQUARE)


def test_point_in_zone_exterior():
    assert not point_in_zone((2.0, 0.5), UNIT_SQUARE)


def test_point_in_zone_boundary_inclusive():
    for p in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.0, 0.0), (1.0, 1.0)]:
        assert point_in_zone(p, UNIT_SQUARE)
        assert _winding_number_inside(p, UNIT_SQUARE)


@given(st.tuples(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5)))
def test_point_in_zone_matches_winding_oracle(p):
    assert point_in_zone(p, UNIT_SQUARE) == _winding_number_inside(p, UNIT_SQUARE)


def test_degenerate_zone_rejected():
    with pytest.raises(DomainError):
        Zone("bad", ((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)))
    with pytest.raises(DomainError):
        Zone("open", ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)))


def test_default_refinement_total_and_identity():
    assert set(DEFAULT_REFINEMENT) == set(ActivityClass)
    assert DEFAULT_REFINEMENT[ActivityClass.STILL] is RefinedMode.STILL
    assert DEFAULT_REFINEMENT[ActivityClass.ON_FOOT] is RefinedMode.WALK
    assert DEFAULT_REFINEMENT[ActivityClass.BICYCLE] is RefinedMode.BICYCLE
    assert DEFAULT_REFINEMENT[ActivityClass.UNKNOWN] is RefinedMode.UNKNOWN
    assert DEFAULT_REFINEMENT[ActivityClass.VEHICLE] is RefinedMode.PRIVATE_VEHICLE


def test_zones_overlap_detection():
    other = Zone("o", ((0.5, 0.5), (0.5, 1.5), (1.5, 1.5), (1.5, 0.5), (0.5, 0.5)))
    far = Zone("f", ((5.0, 5.0), (5.0, 6.0), (6.0, 6.0), (6.0, 5.0), (5.0, 5.0)))
    contained = Zone("c", ((0.25, 0.25), (0.25, 0.75), (0.75, 0.75), (0.75, 0.25), (0.25, 0.25)))
    assert zones_overlap(UNIT_SQUARE, other)
    assert not zones_overlap(UNIT_SQUARE, far)
    assert zones_overlap(UNIT_SQUARE, contained)


def test_default_zones_disjoint(zones):
    for i, a in enumerate(zones):
        for b in zones[i + 1 :]:
            assert not zones_overlap(a, b)
