from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvmax.delta_grid import (
    SHIFTS,
    DeltaCube,
    all_shifts,
    cube_exponents,
    cube_side_lengths,
    exact_ceil,
    grid_cube_containing,
    iter_grid_cubes,
    normalize_dilation,
    one_third_cover,
    rho_delta,
    scale_from_side,
)

DILATIONS = [(1, 1), (1, 2), (1, Fraction(3, 2)), (2, 3), (1, 1, 2), (1, 2, 3)]

dilations = st.sampled_from(DILATIONS).map(normalize_dilation)


@st.composite
def cubes(draw):
    dil = draw(dilations)
    k = draw(st.integers(-6, 6))
    pos = tuple(draw(st.integers(-20, 20)) for _ in range(dil.n))
    shift = tuple(draw(st.sampled_from(SHIFTS)) for _ in range(dil.n))
    return DeltaCube(k, pos, shift, dil)


def test_normalize_keeps_rationals_exact():
    d = normalize_dilation((2, 3))
    assert d.normalized == (Fraction(1), Fraction(3, 2))
    assert d.is_exact()
    assert d.reparametrization == 2


def test_normalize_rejects_nonpositive():
    with pytest.raises(ValueError):
        normalize_dilation((1, 0))
    with pytest.raises(ValueError):
        normalize_dilation(())


def test_side_lengths_examples():
    assert cube_side_lengths(-2, normalize_dilation((1, 3 / 2))) == (Fraction(1, 4), Fraction(1, 8))
    assert cube_side_lengths(1, normalize_dilation((1, 2))) == (2, 4)


def test_exact_ceil_guards_float_noise():
    assert exact_ceil(3 * (0.1 * 10)) == 3
    assert exact_ceil(Fraction(7, 2)) == 4


def test_scale_from_side():
    d = normalize_dilation((1, Fraction(3, 2)))
    assert scale_from_side(2, 1, d) is None
    assert scale_from_side(8, 1, d) == 2
    assert scale_from_side(Fraction(1, 4), 0, d) == -2
    with pytest.raises(ValueError):
        scale_from_side(3, 0, d)


def test_scale_range_enforced():
    with pytest.raises(ValueError):
        cube_exponents(65, normalize_dilation((1, 1)))


def test_documented_offset_example():
    q = grid_cube_containing((0,), 0, (Fraction(1, 3),), normalize_dilation((1,)))
    assert q.position == (-1,)
    assert q.bounds() == ((Fraction(-2, 3), Fraction(1, 3)),)


def test_bad_shift():
    with pytest.raises(ValueError):
        grid_cube_containing((0, 0), 0, (Fraction(1, 2), 0), normalize_dilation((1, 1)))


def test_one_third_cover_of_unit_interval_analogue():
    d = normalize_dilation((1,))
    q = DeltaCube(2, (0,), (Fraction(0),), d)
    pieces = one_third_cover(q)
    assert [p.piece for p in pieces] == [
        ((Fraction(0), Fraction(4, 3)),),
        ((Fraction(4, 3), Fraction(8, 3)),),
        ((Fraction(8, 3), Fraction(4)),),
    ]


@given(cubes())
def test_parent_contains_child(q):
    par = q.parent()
    assert par.contains_cube(q)
    assert par.shift == q.shift
    assert q in par.children()


@given(cubes())
def test_children_tile(q):
    kids = q.children()
    assert sum(c.volume for c in kids) == q.volume
    assert all(q.contains_cube(c) for c in kids)
    for a, b in zip(kids, kids[1:]):
        assert not a.intersects(b)


@given(cubes())
def test_point_lookup_is_consistent(q):
    assert grid_cube_containing(q.center(), q.scale, q.shift, q.dilation) == q
    lo = tuple(b[0] for b in q.bounds())
    assert q.contains_point(lo)
    hi = tuple(b[1] for b in q.bounds())
    assert not q.contains_point(hi)


@given(cubes())
def test_one_third_cover_partitions(q):
    pieces = one_third_cover(q)
    assert len(pieces) == 3**q.n
    assert sum(p.volume for p in pieces) == q.volume
    for p in pieces:
        assert p.cube.scale == q.scale
        for (plo, phi), (clo, chi) in zip(p.piece, p.cube.bounds()):
            third = (chi - clo) / 3
            assert (plo, phi) == (clo + third, clo + 2 * third)


@given(cubes(), cubes())
def test_same_grid_cubes_nest_or_are_disjoint(a, b):
    if a.dilation != b.dilation or a.shift != b.shift:
        return
    if a.intersects(b):
        assert a.contains_cube(b) or b.contains_cube(a)


def test_iter_grid_cubes_inside_and_meeting():
    d = normalize_dilation((1, 2))
    inside = list(iter_grid_cubes((0, 0), (4, 4), 0, (0, 0), d))
    assert len(inside) == 16
    meeting = list(iter_grid_cubes((0.5, 0.5), (1.5, 1.5), 0, (0, 0), d, inside=False))
    assert len(meeting) == 4


def test_all_shifts_count():
    assert len(all_shifts(2)) == 9


def test_rho_delta():
    d = normalize_dilation((1, 2))
    assert rho_delta((0, 0), (0.5, 0.25), d) == pytest.approx(0.5)


def test_box_matches_bounds():
    q = DeltaCube(-1, (3, -2), (Fraction(1, 3), Fraction(2, 3)), normalize_dilation((1, 2)))
    box = q.box()
    assert np.allclose(box.lower, [float(b[0]) for b in q.bounds()])
    assert box.volume == pytest.approx(float(q.volume))
