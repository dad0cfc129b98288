"""Non-isotropic dyadic geometry: dilations, delta-cubes and shifted grids.

A dilation with exponents ``b_j >= 1`` defines cubes whose j-th side is
``2**ceil(k * b_j)`` for a single scale index ``k``.  Grid cubes of the
shifted grid with shift ``s`` (``s_j`` in ``{0, 1/3, 2/3}``) occupy, per
coordinate,

    [2**e * (i + (-1)**e * s_j),  2**e * (i + 1 + (-1)**e * s_j))   e = ceil(k b_j)

The alternating sign makes every shifted grid nested across scales, for
arbitrary jumps in ``e``.  All grid arithmetic is exact (``Fraction``)
whenever the exponents are rational.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

K_MIN, K_MAX = -64, 64
CEIL_GUARD = 2.0 ** -40
SHIFTS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))

Number = int | float | Fraction


def _as_exact(value) -> Fraction | float:
    """Rational inputs (int, Fraction, 'p/q' strings) stay exact; floats do not."""
    if isinstance(value, bool):
        raise TypeError("boolean is not a valid exponent")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


def exact_ceil(x: Fraction | float) -> int:
    if isinstance(x, Fraction):
        return math.ceil(x)
    return math.ceil(x - CEIL_GUARD)


def _check_scale(k: int) -> None:
    if not K_MIN <= k <= K_MAX:
        raise ValueError(f"scale {k} outside [{K_MIN}, {K_MAX}]")


@dataclass(frozen=True)
class Dilation:
    """Exponent vector ``a`` and its normalization ``b = a / min(a)``."""

    exponents: tuple
    normalized: tuple

    @property
    def n(self) -> int:
        return len(self.normalized)

    @property
    def reparametrization(self) -> Fraction | float:
        """The power ``a_{j0}`` in ``t -> t**a_{j0}`` that turns ``a`` into ``b``."""
        return min(self.exponents)

    def is_exact(self) -> bool:
        return all(isinstance(b, Fraction) for b in self.normalized)

    def as_floats(self) -> np.ndarray:
        return np.array([float(b) for b in self.normalized])

    def to_json(self) -> list:
        return [str(a) if isinstance(a, Fraction) else a for a in self.exponents]


def normalize_dilation(a: Sequence[Number | str]) -> Dilation:
    if len(a) == 0:
        raise ValueError("empty exponent vector")
    exps = tuple(_as_exact(v) for v in a)
    if any(not v > 0 for v in exps):
        raise ValueError(f"exponents must be positive, got {a!r}")
    lo = min(exps)
    if all(isinstance(v, Fraction) for v in exps):
        normed = tuple(v / lo for v in exps)
    else:
        normed = tuple(float(v) / float(lo) for v in exps)
        # exact 1 at the minimizing coordinate, not a rounded quotient
        normed = tuple(1.0 if v == lo else b for v, b in zip(exps, normed))
    return Dilation(exps, normed)


def cube_exponents(k: int, d: Dilation) -> tuple[int, ...]:
    """Binary exponents ``ceil(k b_j)`` of the side lengths at scale ``k``."""
    _check_scale(k)
    return _exponents(k, d.normalized)


@functools.lru_cache(maxsize=4096)
def _exponents(k: int, normalized: tuple) -> tuple[int, ...]:
    return tuple(exact_ceil(k * b) for b in normalized)


def cube_side_lengths(k: int, d: Dilation) -> tuple[Fraction, ...]:
    return tuple(Fraction(2) ** e for e in cube_exponents(k, d))


def _dyadic_exponent(length) -> int:
    fr = Fraction(length)
    if fr <= 0:
        raise ValueError(f"side length must be positive, got {length!r}")
    num, den = fr.numerator, fr.denominator
    if den == 1 and num & (num - 1) == 0:
        return num.bit_length() - 1
    if num == 1 and den & (den - 1) == 0:
        return -(den.bit_length() - 1)
    raise ValueError(f"{length!r} is not a power of two")


def scale_from_side(length, j: int, d: Dilation) -> int | None:
    """The unique ``k`` with ``2**ceil(k b_j) == length``, or None."""
    e = _dyadic_exponent(length)
    b = d.normalized[j]
    # ceil(k b) == e  <=>  (e - 1) / b < k <= e / b
    k = math.floor(e / b) if isinstance(b, Fraction) else math.floor(e / b + CEIL_GUARD)
    if K_MIN <= k <= K_MAX and exact_ceil(k * b) == e:
        return k
    return None


def _offset(e: int, s: Fraction) -> Fraction:
    return s if e % 2 == 0 else -s


def _check_shift(shift: Sequence) -> tuple[Fraction, ...]:
    out = tuple(Fraction(v) for v in shift)
    for v in out:
        if v not in SHIFTS:
            raise ValueError(f"shift component {v} not in {{0, 1/3, 2/3}}")
    return out


@dataclass(frozen=True)
class MeasuredBox:
    """Axis-parallel box ``[lower, upper)`` with float corners."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("corner dimension mismatch")
        if any(u < l for l, u in zip(self.lower, self.upper)):
            raise ValueError("upper corner below lower corner")

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return np.all((pts >= lo) & (pts < hi), axis=-1)


@dataclass(frozen=True)
class DeltaCube:
    scale: int
    position: tuple[int, ...]
    shift: tuple[Fraction, ...]
    dilation: Dilation

    def __post_init__(self):
        _check_scale(self.scale)
        if len(self.position) != self.dilation.n or len(self.shift) != self.dilation.n:
            raise ValueError("cube dimension does not match dilation")

    @property
    def n(self) -> int:
        return self.dilation.n

    @property
    def exponents(self) -> tuple[int, ...]:
        return cube_exponents(self.scale, self.dilation)

    @property
    def side_lengths(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(2) ** e for e in self.exponents)

    def bounds(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Exact per-coordinate ``[lower, upper)``."""
        return self._bounds

    @functools.cached_property
    def _bounds(self) -> tuple[tuple[Fraction, Fraction], ...]:
        out = []
        for e, i, s in zip(self.exponents, self.position, self.shift):
            # work in thirds of a side with integers; shifts are multiples of 1/3
            t = s.numerator * (3 // s.denominator)
            num = 3 * i + (t if e % 2 == 0 else -t)
            if e >= 0:
                out.append((Fraction(num << e, 3), Fraction((num + 3) << e, 3)))
            else:
                out.append((Fraction(num, 3 << -e), Fraction(num + 3, 3 << -e)))
        return tuple(out)

    def box(self) -> MeasuredBox:
        b = self.bounds()
        return MeasuredBox(tuple(float(lo) for lo, _ in b), tuple(float(hi) for _, hi in b))

    @property
    def volume(self) -> Fraction:
        return Fraction(2) ** sum(self.exponents)

    def center(self) -> tuple[Fraction, ...]:
        return tuple((lo + hi) / 2 for lo, hi in self.bounds())

    def contains_point(self, x: Sequence) -> bool:
        return all(lo <= Fraction(v) < hi for v, (lo, hi) in zip(x, self.bounds()))

    def contains_cube(self, other: "DeltaCube") -> bool:
        return all(
            lo <= olo and ohi <= hi
            for (lo, hi), (olo, ohi) in zip(self.bounds(), other.bounds())
        )

    def intersects(self, other: "DeltaCube") -> bool:
        return all(
            lo < ohi and olo < hi
            for (lo, hi), (olo, ohi) in zip(self.bounds(), other.bounds())
        )

    def parent(self) -> "DeltaCube":
        return grid_cube_containing(self.center(), self.scale + 1, self.shift, self.dilation)

    def children(self) -> list["DeltaCube"]:
        """Grid cubes one scale below, tiling this cube."""
        k = self.scale - 1
        child_e = cube_exponents(k, self.dilation)
        ranges = []
        for (lo, _), e, ce, s in zip(self.bounds(), self.exponents, child_e, self.shift):
            first = (lo / Fraction(2) ** ce) - _offset(ce, s)
            if first.denominator != 1:
                raise AssertionError("shifted grid is not nested")
            ranges.append(range(int(first), int(first) + 2 ** (e - ce)))
        return [
            DeltaCube(k, tuple(pos), self.shift, self.dilation)
            for pos in itertools.product(*ranges)
        ]


def grid_cube_containing(x: Sequence, k: int, shift: Sequence, d: Dilation) -> DeltaCube:
    if len(x) != d.n:
        raise ValueError("point dimension does not match dilation")
    s = _check_shift(shift)
    pos = []
    for xj, e, sj in zip(x, cube_exponents(k, d), s):
        xj = Fraction(xj)
        if not math.isfinite(float(xj)):
            raise ValueError("point must be finite")
        pos.append(math.floor(xj / Fraction(2) ** e - _offset(e, sj)))
    return DeltaCube(k, tuple(pos), s, d)


def _piece_shift(e: int, s: Fraction, gamma: int) -> Fraction:
    """Shift of the grid whose cubes are offset by ``gamma/3`` of a side."""
    absolute = (_offset(e, s) + Fraction(gamma, 3)) % 1
    return absolute if e % 2 == 0 else (-absolute) % 1


@dataclass(frozen=True)
class ThirdPiece:
    """One of the ``3**n`` pieces ``(Q/3)^gamma`` of the one-third cover.

    ``cube`` is the same-scale grid cube (in grid ``cube.shift``) whose
    concentric middle third is the piece.
    """

    gamma: tuple[int, ...]
    cube: DeltaCube
    piece: tuple[tuple[Fraction, Fraction], ...]

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for lo, hi in self.piece:
            v *= hi - lo
        return v


def one_third_cover(q: DeltaCube) -> list[ThirdPiece]:
    """Split ``q`` into ``3**n`` congruent thirds, each the middle third of a grid cube."""
    out = []
    for gamma in itertools.product((-1, 0, 1), repeat=q.n):
        shift, pos, piece = [], [], []
        for (lo, hi), e, i, s, g in zip(q.bounds(), q.exponents, q.position, q.shift, gamma):
            side = hi - lo
            plo = lo + side * (g + 1) / 3
            piece.append((plo, plo + side / 3))
            ns = _piece_shift(e, s, g)
            # enclosing cube starts one third-side to the left of the piece
            start = plo - side / 3
            idx = start / side - _offset(e, ns)
            if idx.denominator != 1:
                raise AssertionError("one-third piece not aligned to a shifted grid")
            shift.append(ns)
            pos.append(int(idx))
        cube = DeltaCube(q.scale, tuple(pos), tuple(shift), q.dilation)
        out.append(ThirdPiece(gamma, cube, tuple(piece)))
    return out


def rho_delta(x: Sequence[float], y: Sequence[float], d: Dilation) -> float:
    """Quasi-distance ``max_i |x_i - y_i| ** (1/b_i)``."""
    if len(x) != len(y) or len(x) != d.n:
        raise ValueError("dimension mismatch")
    return max(abs(float(a) - float(b)) ** (1.0 / float(bj)) for a, b, bj in zip(x, y, d.normalized))


def iter_grid_cubes(
    lower: Sequence[float],
    upper: Sequence[float],
    k: int,
    shift: Sequence,
    d: Dilation,
    inside: bool = True,
) -> Iterable[DeltaCube]:
    """Grid cubes at scale ``k`` contained in (or, with ``inside=False``, meeting) a box."""
    s = _check_shift(shift)
    ranges = []
    for lo, hi, e, sj in zip(lower, upper, cube_exponents(k, d), s):
        side = Fraction(2) ** e
        off = _offset(e, sj)
        lo, hi = Fraction(lo), Fraction(hi)
        if inside:
            first = math.ceil(lo / side - off)
            last = math.floor(hi / side - off) - 1
        else:
            first = math.floor(lo / side - off)
            last = math.ceil(hi / side - off) - 1
        ranges.append(range(first, last + 1))
    for pos in itertools.product(*ranges):
        yield DeltaCube(k, tuple(pos), s, d)


def all_shifts(n: int) -> list[tuple[Fraction, ...]]:
    return list(itertools.product(SHIFTS, repeat=n))
