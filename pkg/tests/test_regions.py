from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvmax.regions import (
    ExponentPoint,
    HalfPlane,
    Verdict,
    boundary_rows,
    compare_regions,
    dual_region,
    feasible_point,
    grid_membership,
    in_region,
    lattice_witness,
    make_region,
    parse_point,
    polygon_region,
)

rationals = st.fractions(min_value=0, max_value=1, max_denominator=60)
points = st.builds(ExponentPoint, rationals, rationals)


def test_exceptional_points():
    for d in (2, 3, 7):
        assert in_region("delta1", d, ExponentPoint(0, 0))
    assert in_region("delta3", 2, ExponentPoint(1, 1))
    assert not in_region("delta0", None, ExponentPoint(1, 1))


def test_delta0_boundary_point():
    assert not in_region("delta0", None, ExponentPoint(F(1, 2), F(1, 2)))


def test_point_validation():
    with pytest.raises(ValueError):
        ExponentPoint(F(3, 2), 0)
    assert ExponentPoint.from_pq(2, 4) == ExponentPoint(F(1, 2), F(1, 4))
    assert parse_point("1/2, 1/3") == ExponentPoint(F(1, 2), F(1, 3))
    with pytest.raises(ValueError):
        parse_point("1/2")


def test_region_needs_d():
    with pytest.raises(ValueError):
        make_region("delta2", 1)


def test_dual_examples():
    tri = polygon_region([(0, 0), (1, 0), (1, 1)])
    assert tri.contains(ExponentPoint(F(1, 2), F(1, 3)))
    assert dual_region(tri).contains(ExponentPoint(F(1, 2), F(2, 3)))
    assert dual_region(make_region("delta1", 3)).contains(ExponentPoint(0, 1))


@given(points)
def test_dual_involution(pt):
    for r in (make_region("delta1", 3), make_region("delta3", 2), make_region("delta0")):
        assert dual_region(dual_region(r)).contains(pt) == r.contains(pt)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_delta1_equals_delta0_small_d(d):
    assert compare_regions(make_region("delta1", d), make_region("delta0")).verdict is Verdict.EQUAL


def test_delta1_strictly_inside_for_d5():
    cmp = compare_regions(make_region("delta1", 5), make_region("delta0"))
    assert cmp.verdict is Verdict.A_IN_B
    w = cmp.witness_b_not_a
    assert make_region("delta0").contains(w) and not make_region("delta1", 5).contains(w)
    lw = lattice_witness(make_region("delta0"), make_region("delta1", 5), 120)
    assert lw is not None and lw.inv_p.denominator * lw.inv_q.denominator > 0


def test_delta2_comparisons():
    assert compare_regions(make_region("delta2", 2), make_region("delta0")).verdict is Verdict.EQUAL
    assert compare_regions(make_region("delta2", 3), make_region("delta0")).verdict is Verdict.A_IN_B
    assert compare_regions(make_region("delta0"), make_region("delta3", 2)).verdict is Verdict.A_IN_B


@pytest.mark.parametrize("d", range(2, 9))
def test_chain_of_inclusions(d):
    d2, d1, d0 = make_region("delta2", d), make_region("delta1", d), make_region("delta0")
    assert compare_regions(d2, d1).verdict in (Verdict.EQUAL, Verdict.A_IN_B)
    assert compare_regions(d1, d0).verdict in (Verdict.EQUAL, Verdict.A_IN_B)
    if d > 2:
        assert compare_regions(d2, d1).verdict is Verdict.A_IN_B


@given(points, st.integers(2, 8))
def test_membership_matches_lattice_scan(pt, d):
    n = 60
    if (pt.inv_p * n).denominator != 1 or (pt.inv_q * n).denominator != 1:
        return
    r = make_region("delta2", d)
    grid = grid_membership(r, n)
    assert grid[int(pt.inv_p * n), int(pt.inv_q * n)] == r.contains(pt)


def test_halfplane_negation_is_complement():
    h = HalfPlane(3, -1, 1, True)
    for x, y in [(F(1, 2), F(1, 2)), (F(1, 3), F(0)), (F(1), F(1))]:
        assert h.holds(x, y) != h.negate().holds(x, y)


def test_feasible_point_strictness():
    # x < 1/2 and x > 1/2 has no solution, x <= 1/2 and x >= 1/2 does
    assert feasible_point([HalfPlane(1, 0, F(1, 2), True), HalfPlane(-1, 0, F(-1, 2), True)]) is None
    pt = feasible_point([HalfPlane(1, 0, F(1, 2), False), HalfPlane(-1, 0, F(-1, 2), False)])
    assert pt is not None and pt.inv_p == F(1, 2)


def test_boundary_rows():
    rows = boundary_rows(make_region("delta3", 3))
    verts = [(r["inv_p"], r["inv_q"]) for r in rows if r["kind"] == "vertex"]
    assert verts == [("0", "0"), ("1/2", "1/4"), ("3/4", "1/2"), ("1", "1")]
    assert {(r["inv_p"], r["inv_q"]) for r in rows if r["kind"] == "point"} == {("0", "0"), ("1", "1")}
