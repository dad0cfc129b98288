"""Muckenhoupt and reverse Hoelder characteristics over finite families of delta-cubes."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .averaging import DEFAULT_NODES, GridFunction, block_sampling, local_max, lp_norm
from .delta_grid import DeltaCube, Dilation, MeasuredBox, all_shifts, cube_exponents, iter_grid_cubes
from .sparse import cube_mask


@dataclass(frozen=True)
class Weight:
    data: GridFunction
    dilation: Dilation

    def __post_init__(self):
        if np.iscomplexobj(self.data.values) or not np.all(self.data.values > 0):
            raise ValueError("a weight must be strictly positive")
        if self.data.n != self.dilation.n:
            raise ValueError("weight grid dimension does not match the dilation")

    def scaled(self, c: float) -> "Weight":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return Weight(self.data.with_values(self.data.values * c), self.dilation)


def _aligned(q: DeltaCube, f: GridFunction) -> bool:
    h = f.spacing
    for (lo, hi), blo, bhi, hj in zip(q.bounds(), f.box.lower, f.box.upper, h):
        if lo < blo or hi > bhi:
            return False
        for edge in (lo, hi):
            u = (float(edge) - blo) / hj
            if abs(u - round(u)) > 1e-9:
                return False
    return True


def cube_family(f: GridFunction, dilation: Dilation, k_min: int, k_max: int,
                shifts: Iterable | None = None) -> list[DeltaCube]:
    """Cubes of the shifted grids with scale in ``[k_min, k_max]`` that lie in the box on cell edges."""
    if k_min > k_max:
        raise ValueError("empty scale window")
    out = []
    for s in shifts if shifts is not None else all_shifts(dilation.n):
        for k in range(k_min, k_max + 1):
            sides = [2.0 ** e for e in cube_exponents(k, dilation)]
            if any(side < hj * (1 - 1e-12) for side, hj in zip(sides, f.spacing)):
                continue
            for q in iter_grid_cubes(f.box.lower, f.box.upper, k, s, dilation, inside=True):
                if _aligned(q, f):
                    out.append(q)
    return out


def _mean(values: np.ndarray, mask: np.ndarray) -> float:
    sel = values[mask]
    if sel.size == 0:
        raise ValueError("cube contains no grid cell")
    return float(np.mean(sel))


def _check_p(p: float) -> None:
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")


def ap_on_cube(w: Weight, p: float, q: DeltaCube) -> float:
    _check_p(p)
    pp = p / (p - 1)
    mask = cube_mask(w.data, q)
    v = w.data.values
    return _mean(v, mask) * _mean(v ** (1 - pp), mask) ** (p - 1)


def rh_on_cube(w: Weight, p: float, q: DeltaCube) -> float:
    _check_p(p)
    mask = cube_mask(w.data, q)
    v = w.data.values
    return _mean(v**p, mask) ** (1 / p) / _mean(v, mask)


def ap_characteristic(w: Weight, p: float, cubes: Sequence[DeltaCube]) -> float:
    """``max_Q <w>_Q <w^(1-p')>_Q^(p-1)`` over the supplied cubes."""
    _check_p(p)
    if not cubes:
        raise ValueError("empty cube family")
    return max(ap_on_cube(w, p, q) for q in cubes)


def rh_characteristic(w: Weight, p: float, cubes: Sequence[DeltaCube]) -> float:
    """``max_Q <w>_{Q,p} / <w>_Q`` over the supplied cubes."""
    _check_p(p)
    if not cubes:
        raise ValueError("empty cube family")
    return max(rh_on_cube(w, p, q) for q in cubes)


def alpha_exponent(p, q, r):
    """``max(1/(r-p), (q-1)/(q-r))``; exact for rational input."""
    vals = [Fraction(v) if isinstance(v, (int, Fraction, str)) else v for v in (p, q, r)]
    p, q, r = vals
    if not p < r < q:
        raise ValueError(f"need p < r < q, got p={p}, r={r}, q={q}")
    return max(1 / (r - p), (q - 1) / (q - r))


def conjugate(p):
    return p / (p - 1)


def characteristic_bound(w: Weight, p, q, r, cubes: Sequence[DeltaCube]) -> float:
    """``([w]_{A_{r/p}} [w]_{RH_{(q/r)'}})^alpha``."""
    alpha = float(alpha_exponent(p, q, r))
    a = ap_characteristic(w, float(r) / float(p), cubes)
    rh = rh_characteristic(w, float(conjugate(float(q) / float(r))), cubes)
    return (a * rh) ** alpha


def maximal_values(spec, cutoff, f: GridFunction, k_range, per_block: int = 64,
                   nodes: int = DEFAULT_NODES) -> GridFunction:
    """Global maximal function sampled at ``f``'s own cell centres."""
    ts = block_sampling(spec, cutoff, k_range, per_block)
    return f.with_values(local_max(spec, cutoff, f, f.centers(), ts, nodes))


def weighted_norm_ratio(spec, cutoff, f: GridFunction, w: Weight | None, r: float, k_range,
                        per_block: int = 64, nodes: int = DEFAULT_NODES,
                        mf: GridFunction | None = None) -> float:
    """``||M f||_{L^r(w)} / ||f||_{L^r(w)}`` on ``f``'s grid; ``w=None`` is the unweighted ratio."""
    if not r >= 1:
        raise ValueError("r must be >= 1")
    data = None if w is None else w.data
    if data is not None and data.resolution != f.resolution:
        raise ValueError("weight and f must share a grid")
    den = lp_norm(f, r, data)
    if den == 0:
        raise ZeroDivisionError("f has zero weighted norm")
    if mf is None:
        mf = maximal_values(spec, cutoff, f, k_range, per_block, nodes)
    return lp_norm(mf, r, data) / den


# built-in families

def constant_weight(box: MeasuredBox, resolution, dilation: Dilation, c: float = 1.0) -> Weight:
    return Weight(GridFunction(box, np.full(tuple(resolution), float(c))), dilation)


def split_weight(box: MeasuredBox, resolution, dilation: Dilation, low: float = 1.0,
                 high: float = 4.0, axis: int = 0) -> Weight:
    """``low`` on the lower half of ``axis``, ``high`` on the upper half."""
    res = tuple(resolution)
    if res[axis] % 2:
        raise ValueError("split axis needs an even number of cells")
    vals = np.full(res, float(low))
    idx = [slice(None)] * len(res)
    idx[axis] = slice(res[axis] // 2, None)
    vals[tuple(idx)] = high
    return Weight(GridFunction(box, vals), dilation)


def power_weight(box: MeasuredBox, resolution, dilation: Dilation, gamma: float,
                 lo: float = 0.25, hi: float = 4.0) -> Weight:
    """``|x|**gamma`` clipped to ``[lo, hi]``."""
    def fn(x):
        r = np.maximum(np.linalg.norm(x, axis=-1), 1e-300)
        return np.clip(r**gamma, lo, hi)

    return Weight(GridFunction.sample(box, resolution, fn), dilation)


WEIGHT_FAMILIES = ("constant", "split", "power")


def named_weight(name: str, box: MeasuredBox, resolution, dilation: Dilation, gamma: float = 0.5) -> Weight:
    if name == "constant":
        return constant_weight(box, resolution, dilation)
    if name == "split":
        return split_weight(box, resolution, dilation)
    if name == "power":
        return power_weight(box, resolution, dilation, gamma)
    raise ValueError(f"unknown weight family {name!r}")
