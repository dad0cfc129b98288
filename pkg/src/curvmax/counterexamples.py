"""Test sets showing that the L^p -> L^q bounds fail outside the necessary conditions.

The model operator is ``sup_{1<=t<=2} |int_0^1 f(y1 - t x, y2 - t(x**d + c)) dx|``:
a finite-type curve with isotropic dilation and the unit indicator cutoff,
``c = 0`` for S1-S4 and ``c = 1`` for S5.  Each family supplies ``f = 1_S``,
the domain(s) ``D`` where the averages are bounded below, and the powers of
``2**k`` that the lower bound and ``||f||_p`` scale with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .averaging import GridFunction, TimeSampling, average_many, lp_norm
from .delta_grid import MeasuredBox
from .fitting import SlopeFit, fit_slope
from .geometry import Cutoff, Family, SurfaceSpec
from .regions import ExponentPoint, HalfPlane

TAGS = ("S1", "S2", "S3", "S4", "S5")
# spacing of the t_i in units of 2^{-2k} (S4) or 2^{-dk} (S5) used for slope fits
FIT_SPACING = {"S4": 6, "S5": 2}
PAPER_SPACING = 100
MAX_SLABS = 16


def model_spec(tag: str, d: int) -> SurfaceSpec:
    c = 1.0 if tag == "S5" else 0.0
    return SurfaceSpec(Family.FINITE_TYPE_CURVE, d, c=c, phi_coeffs=(1.0,), exponents=(1, 1))


def model_cutoff() -> Cutoff:
    return Cutoff.unit_indicator()


def unit_vectors(d: int) -> tuple[np.ndarray, np.ndarray]:
    s = math.sqrt(d * d + 1)
    return np.array([-1.0, -d]) / s, np.array([-float(d), 1.0]) / s


@dataclass(frozen=True)
class BoxDomain:
    box: MeasuredBox

    @property
    def area(self) -> float:
        return self.box.volume

    def sample(self, m: int, margin: float) -> np.ndarray:
        axes = []
        for lo, hi in zip(self.box.lower, self.box.upper):
            pad = min(margin, 0.25 * (hi - lo))
            axes.append(np.linspace(lo + pad, hi - pad, m))
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)


@dataclass(frozen=True)
class DiscDomain:
    center: tuple[float, float]
    radius: float

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def sample(self, m: int, margin: float) -> np.ndarray:
        r = self.radius - min(margin, 0.5 * self.radius)
        g = np.linspace(-r, r, m)
        pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        pts = pts[np.sum(pts**2, axis=1) <= r * r]
        return pts + np.asarray(self.center)


@dataclass(frozen=True)
class TiltedRect:
    """``{y : |(y - center).e1| <= h1, |(y - center).e2| <= h2}``."""

    center: tuple[float, float]
    e1: tuple[float, float]
    e2: tuple[float, float]
    h1: float
    h2: float

    @property
    def area(self) -> float:
        return 4 * self.h1 * self.h2

    def sample(self, m: int, margin: float) -> np.ndarray:
        a = np.linspace(-1, 1, m) * (self.h1 - min(margin, 0.5 * self.h1))
        b = np.linspace(-1, 1, m) * (self.h2 - min(margin, 0.5 * self.h2))
        aa, bb = np.meshgrid(a, b, indexing="ij")
        pts = aa[..., None] * np.asarray(self.e1) + bb[..., None] * np.asarray(self.e2)
        return pts.reshape(-1, 2) + np.asarray(self.center)

    def contains(self, pts) -> np.ndarray:
        v = np.asarray(pts) - np.asarray(self.center)
        return (np.abs(v @ np.asarray(self.e1)) <= self.h1) & (np.abs(v @ np.asarray(self.e2)) <= self.h2)


@dataclass
class ExampleFamily:
    tag: str
    k: int
    d: int
    f: GridFunction
    domains: list
    lower_bound: float
    lhs_exponent: tuple[Fraction, Fraction]  # (a, b): 2^{k (a + b/q)}
    rhs_exponent: Fraction  # 2^{k c/p}
    exact_volume: float
    t_centers: list[float] = field(default_factory=list)
    slab_count: int = 1
    spacing: float = 0.0
    margin: float = 0.0

    def lhs_power(self, q: float) -> float:
        a, b = self.lhs_exponent
        return float(a) + float(b) / q

    def rhs_power(self, p: float) -> float:
        return float(self.rhs_exponent) / p


def _ones(box: MeasuredBox) -> GridFunction:
    return GridFunction(box, np.ones((2, 2)))


def _resolution(box: MeasuredBox, h: float) -> tuple[int, int]:
    return tuple(max(2, int(math.ceil(side / h))) for side in box.sides)


def curve_distance(points: np.ndarray, d: int, iters: int = 12) -> np.ndarray:
    """Distance from each point to ``{(-x, -x**d) : 0 <= x <= 1}``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    coarse = np.linspace(0.0, 1.0, 129)
    cx, cy = -coarse, -(coarse**d)
    best = np.argmin((pts[:, :1] - cx) ** 2 + (pts[:, 1:] - cy) ** 2, axis=1)
    x = coarse[best]
    p1, p2 = pts[:, 0], pts[:, 1]
    for _ in range(iters):
        # Newton on g(x) = (p1 + x)^2 + (p2 + x^d)^2
        xd = x**d
        g1 = (p1 + x) + d * x ** (d - 1) * (p2 + xd)
        g2 = 1 + d * (d - 1) * x ** max(d - 2, 0) * (p2 + xd) + (d * x ** (d - 1)) ** 2
        x = np.clip(x - g1 / np.where(g2 > 1e-12, g2, 1e-12), 0.0, 1.0)
    dist = np.hypot(p1 + x, p2 + x**d)
    ends = np.minimum(np.hypot(p1, p2), np.hypot(p1 + 1, p2 + 1))
    return np.minimum(dist, ends).reshape(np.shape(points)[:-1])


def arc_length(d: int) -> float:
    return quad(lambda x: math.sqrt(1 + (d * x ** (d - 1)) ** 2), 0.0, 1.0, epsabs=1e-13)[0]


def slab_times(step: float) -> list[float]:
    n = int(math.floor(1.0 / step + 1e-12))
    return [1.0 + i * step for i in range(n + 1)]


def build_example(tag: str, k: int, d: int, cells_across: int = 8,
                  spacing: float | None = None, max_cells: int = 4_000_000) -> ExampleFamily:
    """Indicator, evaluation domains and predicted exponents for one family at scale ``k``.

    ``spacing`` is the gap between consecutive ``t_i`` in units of ``2^{-2k}``
    (S4) or ``2^{-dk}`` (S5); the default is the documented 100.
    """
    tag = tag.upper()
    if tag not in TAGS:
        raise ValueError(f"unknown family {tag!r}")
    if k < 1 or d < 2:
        raise ValueError("need k >= 1 and d >= 2")
    r = 2.0**-k
    sp = float(spacing if spacing is not None else PAPER_SPACING)
    if tag == "S1":
        box = MeasuredBox((-1.0, -(2.0**k)), (1.0, 2.0**k))
        dom = BoxDomain(MeasuredBox((0.0, 0.0), (1.0, 2.0**k)))
        return ExampleFamily(tag, k, d, _ones(box), [dom], 1.0, (Fraction(0), Fraction(1)),
                             Fraction(1), box.volume, margin=1e-3)
    if tag == "S3":
        box = MeasuredBox((-r, -(r**d)), (r, r**d))
        dom = BoxDomain(MeasuredBox((0.0, 0.0), (r, r**d)))
        return ExampleFamily(tag, k, d, _ones(box), [dom], r, (Fraction(-1), Fraction(-(d + 1))),
                             Fraction(-(d + 1)), box.volume, margin=1e-3 * r**d)
    if tag == "S5":
        box = MeasuredBox((-10 * r, -10 * r**d), (10 * r, 10 * r**d))
        step = sp * r**d
        if step <= r**d:
            raise ValueError("S5 spacing must exceed the slab height")
        ts = slab_times(step)
        doms = [BoxDomain(MeasuredBox((0.0, t), (r, t + t ** (1 - d) * r**d))) for t in ts]
        return ExampleFamily(tag, k, d, _ones(box), doms, r / 2, (Fraction(-1), Fraction(-1)),
                             Fraction(-(d + 1)), box.volume, ts, len(ts), step, margin=1e-3 * r**d)
    if tag == "S2":
        h = 2 * r / cells_across
        box = MeasuredBox((-1.0 - r - h, -1.0 - r - h), (r + h, r + h))
        res = _resolution(box, h)
        if res[0] * res[1] > max_cells:
            raise ValueError(f"k={k} too large for {cells_across} cells across the tube")
        f = GridFunction.sample(box, res, lambda x: (curve_distance(x, d) < r).astype(float))
        dom = DiscDomain((0.0, 0.0), r)
        vol = 2 * r * arc_length(d) + math.pi * r * r
        return ExampleFamily(tag, k, d, f, [dom], 1.0, (Fraction(0), Fraction(-2)),
                             Fraction(-1), vol, margin=2 * max(f.spacing))
    # S4
    e1, e2 = unit_vectors(d)
    w1, w2 = 20 * r, 20 * r * r
    h = 2 * w2 / cells_across
    ext = np.abs(e1) * w1 + np.abs(e2) * w2 + h
    box = MeasuredBox(tuple(-ext), tuple(ext))
    res = _resolution(box, h)
    if res[0] * res[1] > max_cells:
        raise ValueError(f"k={k} too large for {cells_across} cells across the thin side")
    rect = TiltedRect((0.0, 0.0), tuple(e1), tuple(e2), w1, w2)
    f = GridFunction.sample(box, res, lambda x: rect.contains(x).astype(float))
    step = sp * r * r
    ts = slab_times(step)
    doms = [TiltedRect((t, t), tuple(e1), tuple(e2), r, r * r) for t in ts]
    return ExampleFamily(tag, k, d, f, doms, r / math.sqrt(d * d + 1),
                         (Fraction(-1), Fraction(-1)), Fraction(-3), 4 * w1 * w2, ts, len(ts), step,
                         margin=2 * max(f.spacing))


def slabs_disjoint(ex: ExampleFamily) -> bool:
    """Exact pairwise disjointness of consecutive D_{t_i} (rational arithmetic)."""
    if ex.tag not in ("S4", "S5") or len(ex.domains) < 2:
        return True
    k, d = ex.k, ex.d
    step = Fraction(ex.spacing).limit_denominator(1 << 62)
    if ex.tag == "S5":
        # slab i occupies [t_i, t_i + t_i^{1-d} 2^{-dk}] in y2; the worst case is t_i = 1
        ts = [1 + i * step for i in range(len(ex.domains))]
        h = Fraction(1, 2 ** (d * k))
        return all(b > a + a ** (1 - d) * h for a, b in zip(ts, ts[1:]))
    # same-orientation rectangles: separated along e1 or e2; centres differ by step*(1,1)
    h1, h2 = Fraction(1, 2**k), Fraction(1, 4**k)
    s2 = d * d + 1
    along_e1 = step**2 * (d + 1) ** 2 > 4 * h1**2 * s2
    along_e2 = step**2 * (d - 1) ** 2 > 4 * h2**2 * s2
    return along_e1 or along_e2


def _time_window(ex: ExampleFamily, t: float) -> np.ndarray:
    r = 2.0**-ex.k
    if ex.tag == "S4":
        win = t + np.linspace(-30, 30, 61) * r * r
    else:
        win = t + np.linspace(-12, 12, 49) * r**ex.d
    return win[(win >= 1.0) & (win <= 2.0)]


@dataclass
class LowerBoundReport:
    lhs_norm: float
    min_ratio: float  # min over sampled y of value / lower bound
    points: int


def lhs_lower_norm(ex: ExampleFamily, q: float, points_per_axis: int = 5, dense: int = 65,
                   nodes: int = 512, max_slabs: int = MAX_SLABS) -> LowerBoundReport:
    """``||M 1_S||_{L^q(union D)}`` from sampled interior points, plus the witness ratio."""
    spec, cut = model_spec(ex.tag, ex.d), model_cutoff()
    base = np.linspace(1.0, 2.0, dense)
    doms = ex.domains
    idx = np.arange(len(doms))
    if len(doms) > max_slabs:
        idx = np.unique(np.linspace(0, len(doms) - 1, max_slabs).round().astype(int))
    weight = len(doms) / len(idx)
    total, worst, count = 0.0, math.inf, 0
    for i in idx:
        dom = doms[i]
        ts = base
        if ex.t_centers:
            ts = np.union1d(base, _time_window(ex, ex.t_centers[i]))
        pts = dom.sample(points_per_axis, ex.margin)
        vals = np.abs(average_many(spec, cut, ex.f, ts, pts, nodes)).max(axis=-1)
        total += weight * dom.area * float(np.mean(vals**q))
        worst = min(worst, float(vals.min()) / ex.lower_bound)
        count += len(pts)
    return LowerBoundReport(total ** (1.0 / q), worst, count)


@dataclass
class ScalingResult:
    tag: str
    d: int
    p: float
    q: float
    ks: list[int]
    lhs_norms: list[float]
    rhs_norms: list[float]
    lhs_fit: SlopeFit
    rhs_fit: SlopeFit
    rhs_exact_fit: SlopeFit
    predicted_lhs: float
    predicted_rhs: float
    min_witness_ratio: float
    disjoint: bool

    def rows(self) -> list[dict]:
        return [{"tag": self.tag, "d": self.d, "k": k, "p": self.p, "q": self.q,
                 "lhs_norm": lhs, "rhs_norm": rhs}
                for k, lhs, rhs in zip(self.ks, self.lhs_norms, self.rhs_norms)]

    def summary(self) -> dict:
        return {
            "tag": self.tag, "d": self.d, "p": self.p, "q": self.q, "k": list(self.ks),
            "lhs_slope": self.lhs_fit.slope, "lhs_r2": self.lhs_fit.r2,
            "rhs_slope": self.rhs_fit.slope, "rhs_r2": self.rhs_fit.r2,
            "rhs_exact_slope": self.rhs_exact_fit.slope,
            "predicted_lhs_slope": self.predicted_lhs, "predicted_rhs_slope": self.predicted_rhs,
            "min_witness_ratio": self.min_witness_ratio, "disjoint": self.disjoint,
        }


def measure_scaling(tag: str, d: int, p: float, q: float, k_range: Sequence[int],
                    spacing: float | None = None, cells_across: int = 8, points_per_axis: int = 4,
                    nodes: int = 256, max_slabs: int = MAX_SLABS) -> ScalingResult:
    """Fit log2 of the lower-bound norm and of ``||1_S||_p`` against ``k``."""
    ks = list(k_range)
    if len(ks) < 3:
        raise ValueError("need at least three scales")
    tag = tag.upper()
    sp = spacing if spacing is not None else FIT_SPACING.get(tag)
    lhs, rhs, exact, worst, disjoint = [], [], [], math.inf, True
    for k in ks:
        ex = build_example(tag, k, d, cells_across, sp)
        rep = lhs_lower_norm(ex, q, points_per_axis, nodes=nodes, max_slabs=max_slabs)
        lhs.append(rep.lhs_norm)
        rhs.append(lp_norm(ex.f, p))
        exact.append(ex.exact_volume ** (1 / p))
        worst = min(worst, rep.min_ratio)
        disjoint &= slabs_disjoint(ex)
    ex = build_example(tag, ks[0], d, cells_across, sp)
    return ScalingResult(
        tag, d, p, q, ks, lhs, rhs,
        fit_slope(ks, np.log2(lhs)), fit_slope(ks, np.log2(rhs)), fit_slope(ks, np.log2(exact)),
        ex.lhs_power(q), ex.rhs_power(p), worst, disjoint,
    )


def predicted_condition(tag: str, d: int) -> HalfPlane:
    """Necessary condition as a closed half-plane in ``(1/p, 1/q)``."""
    tag = tag.upper()
    if tag == "S1":
        return HalfPlane(-1, 1, 0, False)
    if tag == "S2":
        return HalfPlane(Fraction(1, 2), -1, 0, False)
    if tag == "S3":
        return HalfPlane(d + 1, -(d + 1), 1, False)
    if tag == "S4":
        return HalfPlane(3, -1, 1, False)
    if tag == "S5":
        return HalfPlane(d + 1, -1, 1, False)
    raise ValueError(f"unknown family {tag!r}")


CONDITION_NAMES = {"S1": "C1", "S2": "C2", "S3": "C3", "S4": "C4", "S5": "C5"}


def check_sharpness(tag: str, d: int, pt: ExponentPoint) -> bool:
    """True iff ``pt`` violates the family's condition, so the family rules the bound out."""
    return not predicted_condition(tag, d).holds(pt.inv_p, pt.inv_q)


def taylor_control(d: int, k: int, t_values: Sequence[float], samples: int = 257) -> tuple[float, float]:
    """Largest ``|((t x, t x^d) - (t, t)).e_i|`` over ``x`` near 1, in units of ``2^{-k}`` and ``2^{-2k}``."""
    e1, e2 = unit_vectors(d)
    r = 2.0**-k
    x = np.linspace(1 - r / math.sqrt(d * d + 1), 1.0, samples)
    worst1 = worst2 = 0.0
    for t in t_values:
        v = np.stack([t * x - t, t * x**d - t], axis=-1)
        worst1 = max(worst1, float(np.abs(v @ e1).max()) / r)
        worst2 = max(worst2, float(np.abs(v @ e2).max()) / (r * r))
    return worst1, worst2
