import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvmax.averaging import (
    GridFunction,
    TimeSampling,
    average,
    average_many,
    block_offset,
    block_sampling,
    continuity_diff_norm,
    global_max,
    interpolate,
    line_average,
    local_max,
    lp_norm,
    norm_ratio,
    rescale,
    scale_box,
    support_reach,
    transference_lower,
)
from curvmax.delta_grid import MeasuredBox
from curvmax.geometry import Cutoff, Family, SurfaceSpec

HOM2 = SurfaceSpec(Family.HOMOGENEOUS_CURVE, 2)
BOX = MeasuredBox((-2.0, -2.0), (2.0, 2.0))


def disc(radius=0.5, center=(0.0, 0.0), res=64, box=BOX):
    c = np.asarray(center)
    return GridFunction.sample(box, (res, res), lambda x: (np.sum((x - c) ** 2, -1) <= radius**2) * 1.0)


def test_grid_function_basics():
    f = GridFunction.zeros(BOX, (4, 8))
    assert f.resolution == (4, 8)
    assert f.cell_measure == pytest.approx(0.5)
    assert f.centers().shape == (4, 8, 2)
    with pytest.raises(ValueError):
        GridFunction(BOX, np.zeros(3))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1


@given(arrays(np.float64, (3, 5), elements=st.floats(-1e6, 1e6)))
def test_binary_round_trip(vals):
    f = GridFunction(MeasuredBox((-1.5, 0.25), (2.0, 3.0)), vals)
    g = GridFunction.from_bytes(f.to_bytes())
    assert g.box == f.box and np.array_equal(g.values, f.values)


def test_binary_header_layout(tmp_path):
    f = GridFunction(MeasuredBox((0.0, 1.0), (2.0, 3.0)), np.arange(6.0).reshape(2, 3))
    data = f.to_bytes()
    assert int.from_bytes(data[:8], "little") == 2
    assert len(data) == 8 + 6 * 8 + 6 * 8
    f.save(tmp_path / "g.bin")
    assert np.array_equal(GridFunction.load(tmp_path / "g.bin").values, f.values)
    with pytest.raises(ValueError):
        GridFunction.from_bytes(data[:-8])


def test_csv_round_trip():
    f = GridFunction(MeasuredBox((0.0, -1.0), (1.0, 1.0)), np.random.default_rng(0).random((3, 4)))
    text = f.to_csv()
    assert text.startswith("i0,i1,x0,x1,value\r\n")
    g = GridFunction.from_csv(text)
    assert np.array_equal(g.values, f.values)
    assert np.allclose(g.box.lower, f.box.lower) and np.allclose(g.box.upper, f.box.upper)


def test_interpolation_reproduces_affine_functions():
    f = GridFunction.sample(BOX, (9, 7), lambda x: 2 * x[..., 0] - 3 * x[..., 1] + 1)
    rng = np.random.default_rng(1)
    lo = np.array([f.axis_centers(j)[0] for j in range(2)])
    hi = np.array([f.axis_centers(j)[-1] for j in range(2)])
    pts = rng.uniform(lo, hi, size=(500, 2))
    assert np.allclose(interpolate(f, pts), 2 * pts[:, 0] - 3 * pts[:, 1] + 1)


def test_interpolation_outside_box_is_zero():
    f = GridFunction(BOX, np.ones((4, 4)))
    assert interpolate(f, [[2.5, 0.0], [0.0, -2.1]]).tolist() == [0.0, 0.0]
    assert interpolate(f, [[1.99, 1.99]]).tolist() == [1.0]


def test_interpolation_matches_scipy():
    from scipy.interpolate import RegularGridInterpolator

    rng = np.random.default_rng(3)
    f = GridFunction(BOX, rng.normal(size=(6, 5)))
    axes = [f.axis_centers(j) for j in range(2)]
    pts = rng.uniform([axes[0][0], axes[1][0]], [axes[0][-1], axes[1][-1]], size=(300, 2))
    ref = RegularGridInterpolator(axes, f.values)(pts)
    assert np.allclose(interpolate(f, pts), ref, atol=1e-14)


def test_constant_function_gives_integral_of_cutoff():
    cut = Cutoff(0.5, "bump", (0.0,))
    one = GridFunction(MeasuredBox((-10.0, -10.0), (10.0, 10.0)), np.ones((4, 4)))
    x = (np.arange(4096) + 0.5) / 4096 - 0.5
    ref = np.sum(cut(x * 1.0)) / 4096
    for t in (1.0, 1.5, 2.0):
        assert average(HOM2, cut, one, t, (0.3, -0.2), nodes=4096) == pytest.approx(ref, rel=1e-12)


def test_average_degenerate_grid_rejected():
    with pytest.raises(ValueError):
        average(HOM2, Cutoff.for_spec(HOM2), GridFunction(BOX, np.ones((1, 4))), 1.0, (0, 0))


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_translation_equivariance(z1, z2):
    cut = Cutoff.for_spec(HOM2)
    f = disc(res=32)
    z = np.array([z1, z2])
    moved = GridFunction(MeasuredBox(tuple(np.add(BOX.lower, z)), tuple(np.add(BOX.upper, z))), f.values)
    y = np.array([0.1, 0.2])
    assert average(HOM2, cut, moved, 1.3, y + z) == pytest.approx(average(HOM2, cut, f, 1.3, y), abs=1e-12)


def test_model_lower_bound_on_s1():
    # f = 1_{[-1,1] x [-2^k, 2^k]}, unit indicator cutoff, y in [0,1] x [0, 2^k]
    spec = SurfaceSpec(Family.FINITE_TYPE_CURVE, 3, exponents=(1, 1))
    k = 3
    f = GridFunction(MeasuredBox((-1.0, -8.0), (1.0, 8.0)), np.ones((2, 2)))
    rng = np.random.default_rng(4)
    ys = rng.uniform([0, 0], [1, 8], size=(50, 2))
    vals = average_many(spec, Cutoff.unit_indicator(), f, [1.0], ys)[:, 0]
    assert np.all(vals >= 1 - 1e-12)


def test_linearity_and_positivity():
    cut = Cutoff.for_spec(HOM2)
    rng = np.random.default_rng(5)
    f = GridFunction(BOX, rng.random((16, 16)))
    g = GridFunction(BOX, rng.random((16, 16)))
    y = rng.uniform(-1, 1, size=(20, 2))
    ts = np.linspace(1, 2, 9)
    af, ag = average_many(HOM2, cut, f, ts, y), average_many(HOM2, cut, g, ts, y)
    afg = average_many(HOM2, cut, f.with_values(2 * f.values - 3 * g.values), ts, y)
    assert np.allclose(afg, 2 * af - 3 * ag, atol=1e-12)
    assert np.all(af >= 0)


def test_local_max_properties():
    cut = Cutoff.for_spec(HOM2)
    rng = np.random.default_rng(6)
    f = GridFunction(BOX, rng.random((16, 16)))
    g = GridFunction(BOX, rng.random((16, 16)))
    ts = TimeSampling.dense(17)
    y = rng.uniform(-1, 1, size=(30, 2))
    mf, mg = local_max(HOM2, cut, f, y, ts), local_max(HOM2, cut, g, y, ts)
    mfg = local_max(HOM2, cut, f.with_values(f.values + g.values), y, ts)
    assert np.all(mfg <= mf + mg + 1e-12)
    assert np.all(mf >= average_many(HOM2, cut, f, [1.0], y)[:, 0] - 1e-15)
    assert np.all(local_max(HOM2, cut, f, y, ts.refined()) >= mf)
    integral = average(HOM2, cut, GridFunction(BOX, np.ones((4, 4))), 1.0, (0.0, 0.0))
    assert np.all(mf <= f.values.max() * integral + 1e-12)
    assert local_max(HOM2, cut, f.with_values(0 * f.values), (0.0, 0.0), ts) == 0.0


def test_time_sampling():
    with pytest.raises(ValueError):
        TimeSampling.dense(0)
    with pytest.raises(ValueError):
        TimeSampling("dense", np.array([]))
    blocks = TimeSampling.dyadic_blocks(0, 2, 5, m=1)
    assert blocks.samples.min() == 0.25 and blocks.samples.max() == 2.0
    assert TimeSampling.per_unit().samples.size == 513


def test_block_offset_rule():
    cut = Cutoff.for_spec(HOM2)
    m = block_offset(HOM2, cut, range(-2, 3))
    reach = support_reach(HOM2, cut)
    for k in range(-2, 3):
        t = 2.0 ** (k - m)
        assert t * reach[0] <= 2.0**k / 4 and t**2 * reach[1] <= 2.0 ** (2 * k) / 4
    # m is the smallest such integer
    t = 2.0 ** (-(m - 1))
    assert t * reach[0] > 1 / 4 or t**2 * reach[1] > 1 / 4


def test_global_max_matches_dense_oracle():
    cut = Cutoff(0.75, "bump", (1.25,))
    f = disc(0.3, (0.2, 0.1), 48)
    ks = range(-1, 5)
    y = np.array([[1.0, 1.2], [0.5, 0.4], [-0.3, 0.9]])
    ts = block_sampling(HOM2, cut, ks, 256)
    lo, hi = ts.interval
    dense = TimeSampling("dense", np.linspace(lo, hi, 4096), (lo, hi))
    gm = global_max(HOM2, cut, f, y, ks, 256)
    oracle = local_max(HOM2, cut, f, y, dense)
    assert np.allclose(gm, oracle, rtol=0.01)
    assert np.all(gm >= local_max(HOM2, cut, f, y, TimeSampling.dense(65)) * 0.99)


def test_lp_norm_examples():
    f = GridFunction(MeasuredBox((0.0, 0.0), (1.0, 1.0)), np.zeros((4, 4)))
    cell = f.with_values(np.eye(4)[0][:, None] * np.eye(4)[0][None, :])
    for p in (1, 2, 3.5):
        assert lp_norm(cell, p) == pytest.approx((1 / 16) ** (1 / p))
    assert lp_norm(cell, math.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(cell, 0.5)


@given(arrays(np.float64, (4, 4), elements=st.floats(-100, 100)), st.floats(-10, 10),
       st.floats(1, 4), st.floats(0, 4))
def test_lp_norm_scaling_and_nesting(vals, c, p, dq):
    f = GridFunction(MeasuredBox((0.0, 0.0), (1.0, 1.0)), vals)
    assert lp_norm(f.with_values(c * vals), p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-9, abs=1e-300)
    assert lp_norm(f, p) <= lp_norm(f, p + dq) * (1 + 1e-9) + 1e-300


def test_weight_of_ones_is_bit_identical():
    f = disc(res=16)
    ones = f.with_values(np.ones(f.resolution))
    for p in (1.0, 2.0, 3.0):
        assert lp_norm(f, p, ones) == lp_norm(f, p)


def test_rescaling_identity():
    cut = Cutoff.for_spec(HOM2)
    f = disc(0.5, (0.0, 0.0), 64)
    ebox = MeasuredBox((-1.5, -1.5), (1.5, 1.5))
    p, q = 2.0, 3.0
    base = TimeSampling.dense(33)
    for k in (1, 2):
        tk = rescale(f, k, 2, p)
        assert lp_norm(tk, p) == pytest.approx(lp_norm(f, p), rel=1e-12)
        lhs = norm_ratio(HOM2, cut, tk, p, q, base, scale_box(ebox, (2.0**-k, 4.0**-k)), (32, 32), 256)
        rhs = norm_ratio(HOM2, cut, f, p, q, base.scaled(2.0**k), ebox, (32, 32), 256)
        assert lhs == pytest.approx(2 ** (3 * k * (1 / p - 1 / q)) * rhs, rel=1e-9)


def test_norm_ratio_zero_function():
    with pytest.raises(ZeroDivisionError):
        norm_ratio(HOM2, Cutoff.for_spec(HOM2), GridFunction(BOX, np.zeros((4, 4))), 2, 2,
                   TimeSampling.dense(3), BOX, (4, 4))


def test_continuity_difference():
    cut = Cutoff.for_spec(HOM2)
    f = disc(0.5, (0.0, 0.0), 32)
    ts = TimeSampling.dense(9)
    box = MeasuredBox((-2.0, -2.0), (2.0, 2.0))
    assert continuity_diff_norm(HOM2, cut, f, (0.0, 0.0), 2, ts, box, (32, 32)) == 0.0
    # the eval box holds the whole support and z is a multiple of its spacing, so
    # z and -z differ by a relabelling of the same grid differences
    plus = continuity_diff_norm(HOM2, cut, f, (0.0, 0.25), 2, ts, box, (32, 32))
    minus = continuity_diff_norm(HOM2, cut, f, (0.0, -0.25), 2, ts, box, (32, 32))
    assert plus > 0
    assert minus == pytest.approx(plus, rel=1e-9)


def test_transference_inequality():
    rng = np.random.default_rng(7)
    box = MeasuredBox((-3.0, -3.0), (3.0, 3.0))
    for _ in range(10):
        f = GridFunction(box, rng.random((24, 24)))
        y = rng.uniform(-1, 1, 2)
        assert transference_lower(HOM2, f, y, TimeSampling.dense(65), nodes=256)
    one = GridFunction(box, np.ones((4, 4)))
    assert line_average(one, 2, (0.0, 0.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        transference_lower(SurfaceSpec(Family.FINITE_TYPE_CURVE, 2), one, (0.0, 0.0))
