import math
from fractions import Fraction

import numpy as np
import pytest

from curvmax.averaging import lp_norm
from curvmax.counterexamples import (
    FIT_SPACING,
    TAGS,
    build_example,
    check_sharpness,
    curve_distance,
    lhs_lower_norm,
    measure_scaling,
    predicted_condition,
    slabs_disjoint,
    taylor_control,
    unit_vectors,
)
from curvmax.regions import ExponentPoint

F = Fraction


def test_s1_box_and_domain():
    ex = build_example("S1", 3, 2)
    assert (ex.f.box.lower, ex.f.box.upper) == ((-1.0, -8.0), (1.0, 8.0))
    dom = ex.domains[0].box
    assert (dom.lower, dom.upper) == ((0.0, 0.0), (1.0, 8.0))
    assert ex.lhs_power(4) == 0.25 and ex.rhs_power(2) == 0.5


def test_s3_box():
    ex = build_example("S3", 2, 2)
    assert (ex.f.box.lower, ex.f.box.upper) == ((-0.25, -1 / 16), (0.25, 1 / 16))
    assert lp_norm(ex.f, 1) == pytest.approx(ex.exact_volume)


def test_s2_tube_and_disc():
    ex = build_example("S2", 2, 2)
    assert ex.domains[0].center == (0.0, 0.0) and ex.domains[0].radius == 0.25
    pts = ex.f.centers().reshape(-1, 2)
    inside = ex.f.values.reshape(-1) > 0
    dist = curve_distance(pts, 2)
    assert np.all(dist[inside] < 0.25) and np.all(dist[~inside] >= 0.25)
    # rasterised area tracks the analytic tube area
    assert lp_norm(ex.f, 1) == pytest.approx(ex.exact_volume, rel=0.05)


def test_curve_distance_on_curve():
    x = np.linspace(0, 1, 11)
    pts = np.stack([-x, -x**3], axis=-1)
    assert np.max(curve_distance(pts, 3)) < 1e-9


def test_s4_geometry():
    e1, e2 = unit_vectors(2)
    assert np.dot(e1, e2) == pytest.approx(0.0, abs=1e-15)
    assert np.linalg.norm(e1) == pytest.approx(1.0)
    ex = build_example("S4", 2, 2)
    # thin side resolved by at least four cells
    assert 2 * 20 * 2.0**-4 / max(ex.f.spacing) >= 4
    assert ex.spacing == 100 * 2.0**-4
    assert ex.lower_bound == pytest.approx(0.25 / math.sqrt(5))


def test_s5_slabs():
    ex = build_example("S5", 2, 3, spacing=2)
    assert ex.slab_count == len(ex.domains) == len(ex.t_centers)
    assert ex.t_centers[0] == 1.0 and ex.t_centers[-1] <= 2.0
    with pytest.raises(ValueError):
        build_example("S5", 2, 3, spacing=1)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_example("S6", 2, 2)
    with pytest.raises(ValueError):
        build_example("S1", 0, 2)
    with pytest.raises(ValueError):
        build_example("S4", 9, 2)
    with pytest.raises(ValueError):
        measure_scaling("S1", 2, 2, 2, [2, 3])


@pytest.mark.parametrize("tag", ["S4", "S5"])
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("spacing", [None, "fit"])
def test_slabs_disjoint(tag, d, spacing):
    sp = FIT_SPACING[tag] if spacing == "fit" else None
    for k in (2, 3, 4, 5):
        assert slabs_disjoint(build_example(tag, k, d, spacing=sp))


def test_disjointness_detects_overlap():
    ex = build_example("S4", 3, 2, spacing=6)
    ex.spacing = 0.5 * 2.0**-6
    assert not slabs_disjoint(ex)


def test_predicted_conditions():
    assert predicted_condition("S1", 2).holds(F(1, 2), F(1, 2))
    assert not predicted_condition("S1", 2).holds(F(1, 2), F(3, 4))
    s4 = predicted_condition("S4", 2)
    assert s4.holds(F(1, 2), F(1, 2)) and not s4.holds(F(1, 2), F(0))
    s5 = predicted_condition("S5", 3)
    assert s5.holds(F(1, 4), F(0)) and not s5.holds(F(1, 2), F(1, 2))
    assert s5.value(F(1, 2), F(1, 2)) == F(4, 2) - F(1, 2)
    with pytest.raises(ValueError):
        predicted_condition("S9", 2)


def test_sharpness_examples():
    assert check_sharpness("S1", 2, ExponentPoint(F(1, 2), F(3, 4)))
    assert not check_sharpness("S4", 2, ExponentPoint(F(1, 2), F(1, 2)))
    assert check_sharpness("S5", 2, ExponentPoint(F(1, 2), F(1, 4)))


@pytest.mark.parametrize("d", [2, 3])
def test_taylor_control(d):
    for k in (2, 3, 4, 5):
        ex = build_example("S4", k, d, spacing=FIT_SPACING["S4"])
        a, b = taylor_control(d, k, ex.t_centers)
        assert a <= 10 and b <= 10


@pytest.mark.parametrize("tag", TAGS)
def test_witness_lower_bound(tag):
    ex = build_example(tag, 2, 2, spacing=FIT_SPACING.get(tag))
    rep = lhs_lower_norm(ex, 2.0, points_per_axis=3, nodes=128, max_slabs=4)
    assert rep.min_ratio >= 0.95
    assert rep.points > 0 and rep.lhs_norm > 0


def test_s1_and_s3_scaling():
    s1 = measure_scaling("S1", 2, 2, 4, [2, 3, 4], points_per_axis=3, nodes=128)
    assert s1.lhs_fit.slope == pytest.approx(0.25, rel=0.1)
    assert s1.rhs_fit.slope == pytest.approx(0.5, rel=1e-9)
    s3 = measure_scaling("S3", 3, 2, 2, [2, 3, 4], points_per_axis=3, nodes=128)
    assert s3.rhs_fit.slope == pytest.approx(-2.0, rel=1e-9)
    assert s3.lhs_fit.slope == pytest.approx(s3.predicted_lhs, rel=0.1)
    assert len(s3.rows()) == 3 and set(s3.summary()) >= {"lhs_slope", "rhs_slope"}
