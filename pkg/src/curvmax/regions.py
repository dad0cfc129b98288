"""Exponent regions in the (1/p, 1/q) square, decided in exact rational arithmetic.

A region is a finite system of half-planes ``a*x + b*y < c`` (or ``<=``)
intersected with the closed unit square, united with finitely many
exceptional points.  Here ``x = 1/p`` and ``y = 1/q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

F = Fraction


@dataclass(frozen=True, order=True)
class ExponentPoint:
    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        x, y = F(self.inv_p), F(self.inv_q)
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise ValueError(f"exponent point ({x}, {y}) outside [0,1]^2")
        object.__setattr__(self, "inv_p", x)
        object.__setattr__(self, "inv_q", y)

    @classmethod
    def from_pq(cls, p, q) -> "ExponentPoint":
        return cls(F(1) / F(p), F(1) / F(q))

    def __str__(self) -> str:
        return f"({self.inv_p}, {self.inv_q})"


@dataclass(frozen=True)
class HalfPlane:
    """``a*x + b*y < c`` when strict, ``a*x + b*y <= c`` otherwise."""

    a: Fraction
    b: Fraction
    c: Fraction
    strict: bool

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, F(getattr(self, name)))

    def value(self, x: Fraction, y: Fraction) -> Fraction:
        return self.a * x + self.b * y

    def holds(self, x: Fraction, y: Fraction) -> bool:
        v = self.value(x, y)
        return v < self.c if self.strict else v <= self.c

    def negate(self) -> "HalfPlane":
        return HalfPlane(-self.a, -self.b, -self.c, not self.strict)

    def integer_form(self) -> tuple[int, int, int]:
        den = math.lcm(self.a.denominator, self.b.denominator, self.c.denominator)
        return int(self.a * den), int(self.b * den), int(self.c * den)

    def __str__(self) -> str:
        op = "<" if self.strict else "<="
        return f"{self.a}*x + {self.b}*y {op} {self.c}"


UNIT_SQUARE = (
    HalfPlane(-1, 0, 0, False),
    HalfPlane(1, 0, 1, False),
    HalfPlane(0, -1, 0, False),
    HalfPlane(0, 1, 1, False),
)


@dataclass(frozen=True)
class Region:
    constraints: tuple[HalfPlane, ...]
    exceptional: frozenset = field(default_factory=frozenset)
    name: str = ""
    d: int | None = None

    def contains(self, pt: ExponentPoint) -> bool:
        if pt in self.exceptional:
            return True
        return all(h.holds(pt.inv_p, pt.inv_q) for h in self.constraints)

    def all_constraints(self) -> tuple[HalfPlane, ...]:
        return UNIT_SQUARE + self.constraints

    def closure_polygon(self) -> list[tuple[Fraction, Fraction]]:
        """Vertices (counter-clockwise) of the closure of the polygonal part."""
        return _order_ccw(_clip(self.all_constraints()))


class RegionName(str, Enum):
    DELTA0 = "delta0"
    DELTA1 = "delta1"
    DELTA2 = "delta2"
    DELTA3 = "delta3"


ORIGIN = ExponentPoint(0, 0)
CORNER = ExponentPoint(1, 1)

# y > x/2 and y <= x
_BAND = (HalfPlane(1, -2, 0, True), HalfPlane(-1, 1, 0, False))


def make_region(which: str | RegionName, d: int | None = None) -> Region:
    which = RegionName(str(which.value if isinstance(which, RegionName) else which).lower())
    if which is not RegionName.DELTA0 and (d is None or d < 2):
        raise ValueError(f"{which.value} needs an integer d >= 2")
    if which is RegionName.DELTA0:
        cons = _BAND + (HalfPlane(3, -1, 1, True),)
        return Region(cons, frozenset({ORIGIN}), "delta0", None)
    if which is RegionName.DELTA1:
        cons = _BAND + (HalfPlane(3, -1, 1, True), HalfPlane(1, -1, F(1, d + 1), True))
        return Region(cons, frozenset({ORIGIN}), "delta1", d)
    if which is RegionName.DELTA2:
        cons = _BAND + (HalfPlane(d + 1, -1, 1, True),)
        return Region(cons, frozenset({ORIGIN}), "delta2", d)
    cons = _BAND + (HalfPlane(2, -1, 1, True), HalfPlane(1, -1, F(1, d + 1), True))
    return Region(cons, frozenset({ORIGIN, CORNER}), "delta3", d)


def in_region(which: str | RegionName, d: int | None, pt: ExponentPoint) -> bool:
    return make_region(which, d).contains(pt)


def polygon_region(vertices: Sequence[tuple], name: str = "L") -> Region:
    """Open convex polygon with the given vertices (any orientation)."""
    verts = _order_ccw([(F(x), F(y)) for x, y in vertices])
    if len(verts) < 3:
        raise ValueError("polygon needs at least three non-collinear vertices")
    cons = []
    for (x0, y0), (x1, y1) in zip(verts, verts[1:] + verts[:1]):
        # interior lies to the left of each ccw edge
        a, b = y1 - y0, x0 - x1
        cons.append(HalfPlane(a, b, a * x0 + b * y0, True))
    return Region(tuple(cons), frozenset(), name, None)


def _reflect(pt: ExponentPoint) -> ExponentPoint:
    return ExponentPoint(pt.inv_p, 1 - pt.inv_q)


def dual_region(region: Region) -> Region:
    """``{(x, y') : (x, 1 - y') in region}``."""
    cons = tuple(HalfPlane(h.a, -h.b, h.c - h.b, h.strict) for h in region.constraints)
    exc = frozenset(_reflect(p) for p in region.exceptional)
    name = region.name[:-1] if region.name.endswith("'") else region.name + "'"
    return Region(cons, exc, name, region.d)


# exact planar feasibility

def _intersect(h: HalfPlane, p, q):
    """Point where segment pq crosses the line of h."""
    vp, vq = h.value(*p) - h.c, h.value(*q) - h.c
    t = vp / (vp - vq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def _clip(constraints: Iterable[HalfPlane]) -> list[tuple[Fraction, Fraction]]:
    """Sutherland-Hodgman clipping of the unit square by closed half-planes."""
    poly = [(F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))]
    for h in constraints:
        if not poly:
            break
        out = []
        for i, cur in enumerate(poly):
            prev = poly[i - 1]
            cin = h.value(*cur) <= h.c
            pin = h.value(*prev) <= h.c
            if cin:
                if not pin:
                    out.append(_intersect(h, prev, cur))
                out.append(cur)
            elif pin:
                out.append(_intersect(h, prev, cur))
        poly = list(dict.fromkeys(out))
    return poly


def _order_ccw(points):
    pts = list(dict.fromkeys(points))
    if len(pts) < 3:
        return pts
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    return sorted(pts, key=lambda p: math.atan2(float(p[1] - cy), float(p[0] - cx)))


def feasible_point(constraints: Sequence[HalfPlane]) -> ExponentPoint | None:
    """A point satisfying every constraint (strict ones strictly), or None.

    The closure is a convex polygon; the mean of its vertices lies in its
    relative interior, and the system is feasible iff that point satisfies it.
    """
    cons = UNIT_SQUARE + tuple(constraints)
    verts = _clip(cons)
    if not verts:
        return None
    x = sum(v[0] for v in verts) / len(verts)
    y = sum(v[1] for v in verts) / len(verts)
    if all(h.holds(x, y) for h in cons):
        return ExponentPoint(x, y)
    return None


def _is_single_point(constraints) -> bool:
    return len(_clip(UNIT_SQUARE + tuple(constraints))) == 1


def difference_witness(a: Region, b: Region) -> ExponentPoint | None:
    """A point of ``a`` outside ``b``, or None if ``a`` is a subset of ``b``."""
    for pt in sorted(a.exceptional):
        if not b.contains(pt):
            return pt
    for h in b.constraints:
        system = a.constraints + (h.negate(),)
        pt = feasible_point(system)
        if pt is None:
            continue
        if pt in b.exceptional and _is_single_point(system):
            continue
        if not b.contains(pt):
            return pt
    return None


class Verdict(str, Enum):
    EQUAL = "equal"
    A_IN_B = "A<B"
    B_IN_A = "B<A"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class Comparison:
    verdict: Verdict
    witness_a_not_b: ExponentPoint | None
    witness_b_not_a: ExponentPoint | None
    sample_disagreements: int
    samples: int


def grid_membership(region: Region, denominator: int) -> np.ndarray:
    """Exact membership on the lattice ``(i/N, j/N)``, indexed ``[i, j]``."""
    n = denominator
    i, j = np.meshgrid(np.arange(n + 1, dtype=np.int64), np.arange(n + 1, dtype=np.int64), indexing="ij")
    mask = np.ones_like(i, dtype=bool)
    for h in region.constraints:
        a, b, c = h.integer_form()
        lhs, rhs = a * i + b * j, c * n
        mask &= lhs < rhs if h.strict else lhs <= rhs
    for pt in region.exceptional:
        xi, yj = pt.inv_p * n, pt.inv_q * n
        if xi.denominator == 1 and yj.denominator == 1:
            mask[int(xi), int(yj)] = True
    return mask


def compare_regions(a: Region, b: Region, samples: int = 120) -> Comparison:
    """Exact set comparison with a lattice-sampling cross-check at denominator ``samples``."""
    if samples < 1:
        raise ValueError("samples must be positive")
    wa = difference_witness(a, b)
    wb = difference_witness(b, a)
    ma, mb = grid_membership(a, samples), grid_membership(b, samples)
    # lattice points contradicting the exact verdict
    bad = 0
    if wa is None:
        bad += int(np.sum(ma & ~mb))
    if wb is None:
        bad += int(np.sum(mb & ~ma))
    if bad:
        raise AssertionError(f"sampling found {bad} points contradicting the exact verdict")
    if wa is None and wb is None:
        verdict = Verdict.EQUAL
    elif wa is None:
        verdict = Verdict.A_IN_B
    elif wb is None:
        verdict = Verdict.B_IN_A
    else:
        verdict = Verdict.INCOMPARABLE
    return Comparison(verdict, wa, wb, bad, (samples + 1) ** 2)


def lattice_witness(a: Region, b: Region, denominator: int = 120) -> ExponentPoint | None:
    """First lattice point of ``a`` not in ``b``, scanning ``i`` then ``j``."""
    diff = grid_membership(a, denominator) & ~grid_membership(b, denominator)
    idx = np.argwhere(diff)
    if idx.size == 0:
        return None
    i, j = idx[0]
    return ExponentPoint(F(int(i), denominator), F(int(j), denominator))


def boundary_rows(region: Region) -> list[dict]:
    """Closure-polygon vertices plus exceptional points, ready for CSV."""
    rows = []
    for order, (x, y) in enumerate(region.closure_polygon()):
        rows.append({"region": region.name, "d": region.d if region.d is not None else "",
                     "kind": "vertex", "order": order, "inv_p": str(x), "inv_q": str(y)})
    for order, pt in enumerate(sorted(region.exceptional)):
        rows.append({"region": region.name, "d": region.d if region.d is not None else "",
                     "kind": "point", "order": order, "inv_p": str(pt.inv_p), "inv_q": str(pt.inv_q)})
    return rows


def parse_point(text: str) -> ExponentPoint:
    """Parse ``'1/p,1/q'`` given as two rationals, e.g. ``'1/2,1/3'``."""
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'inv_p,inv_q', got {text!r}")
    return ExponentPoint(F(parts[0].strip()), F(parts[1].strip()))
