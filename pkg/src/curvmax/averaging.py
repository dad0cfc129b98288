"""Discretized averaging operators, maximal functions and L^p norms.

``A_t f(y) = int f(y - delta_t Gamma(x)) eta(x) dx`` is evaluated with a
midpoint rule in the parameter ``x`` and multilinear interpolation of the
sampled ``f``.  The dilation uses the normalized exponents ``b`` (the
reparametrization ``t -> t**a_min`` does not change any supremum over t).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .delta_grid import MeasuredBox, exact_ceil
from .geometry import Cutoff, Family, SurfaceSpec, surface_points

DEFAULT_NODES = 512
CHUNK_POINTS = 1 << 22


@dataclass(frozen=True)
class GridFunction:
    """Cell-centred samples on a box; ``values`` has shape ``resolution``."""

    box: MeasuredBox
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != self.box.n:
            raise ValueError(f"values must be {self.box.n}-dimensional, got shape {vals.shape}")
        if any(s < 1 for s in vals.shape):
            raise ValueError("empty grid")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def resolution(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def spacing(self) -> np.ndarray:
        return np.asarray(self.box.sides) / np.asarray(self.resolution)

    @property
    def cell_measure(self) -> float:
        return self.box.volume / float(np.prod(self.resolution))

    def axis_centers(self, axis: int) -> np.ndarray:
        lo, h = self.box.lower[axis], self.spacing[axis]
        return lo + (np.arange(self.resolution[axis]) + 0.5) * h

    def centers(self) -> np.ndarray:
        """Cell centres with shape ``resolution + (n,)``."""
        axes = [self.axis_centers(j) for j in range(self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.box, np.asarray(values).reshape(self.resolution))

    @classmethod
    def sample(cls, box: MeasuredBox, resolution: Sequence[int], fn: Callable) -> "GridFunction":
        """Evaluate ``fn`` (vectorized over a trailing coordinate axis) at cell centres."""
        tmp = cls(box, np.zeros(tuple(resolution)))
        return cls(box, np.asarray(fn(tmp.centers()), dtype=float))

    @classmethod
    def zeros(cls, box: MeasuredBox, resolution: Sequence[int]) -> "GridFunction":
        return cls(box, np.zeros(tuple(resolution)))

    def __call__(self, points) -> np.ndarray:
        return interpolate(self, points)

    # serialization

    def to_bytes(self) -> bytes:
        if np.iscomplexobj(self.values):
            raise TypeError("binary format stores real values only")
        n = self.n
        header = struct.pack(
            f"<q{n}d{n}d{n}q", n, *self.box.lower, *self.box.upper, *self.resolution
        )
        return header + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction":
        if len(data) < 8:
            raise ValueError("truncated grid header")
        (n,) = struct.unpack_from("<q", data, 0)
        if not 1 <= n <= 16:
            raise ValueError(f"implausible grid dimension {n}")
        fmt = f"<{n}d{n}d{n}q"
        off = 8 + struct.calcsize(fmt)
        fields = struct.unpack_from(fmt, data, 8)
        lower, upper, res = fields[:n], fields[n : 2 * n], fields[2 * n :]
        count = int(np.prod(res))
        if len(data) != off + 8 * count:
            raise ValueError("payload length does not match resolution")
        vals = np.frombuffer(data, dtype="<f8", offset=off, count=count).reshape(res)
        return cls(MeasuredBox(tuple(lower), tuple(upper)), vals.astype(float))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "GridFunction":
        return cls.from_bytes(Path(path).read_bytes())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow([f"i{j}" for j in range(self.n)] + [f"x{j}" for j in range(self.n)] + ["value"])
        axes = [self.axis_centers(j) for j in range(self.n)]
        for idx in itertools.product(*(range(r) for r in self.resolution)):
            w.writerow(list(idx) + [repr(float(axes[j][i])) for j, i in enumerate(idx)]
                       + [repr(float(self.values[idx]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        head, body = rows[0], rows[1:]
        n = sum(1 for h in head if h.startswith("i"))
        idx = np.array([[int(v) for v in r[:n]] for r in body])
        xs = np.array([[float(v) for v in r[n : 2 * n]] for r in body])
        vals = np.array([float(r[2 * n]) for r in body])
        res = tuple(int(m) + 1 for m in idx.max(axis=0))
        if any(r < 2 for r in res):
            raise ValueError("CSV grids need at least two cells per axis")
        lower, upper = [], []
        for j in range(n):
            c = np.unique(xs[:, j])
            h = (c[-1] - c[0]) / (res[j] - 1)
            lower.append(float(c[0] - h / 2))
            upper.append(float(c[-1] + h / 2))
        out = np.zeros(res)
        out[tuple(idx.T)] = vals
        return cls(MeasuredBox(tuple(lower), tuple(upper)), out)


def interpolate(f: GridFunction, points) -> np.ndarray:
    """Multilinear interpolation of cell-centred samples; zero outside the box.

    Inside the box but beyond the outermost centres the nearest edge value is used.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != f.n:
        raise ValueError(f"points must have trailing dimension {f.n}")
    flat = pts.reshape(-1, f.n)
    vals = f.values
    vflat = vals.ravel()
    res = f.resolution
    strides = np.cumprod((1,) + res[:0:-1])[::-1]
    inside = np.ones(flat.shape[0], dtype=bool)
    base = np.zeros(flat.shape[0], dtype=np.int64)
    fracs, steps = [], []
    for j in range(f.n):
        x = flat[:, j]
        lo, hi = f.box.lower[j], f.box.upper[j]
        inside &= (x >= lo) & (x <= hi)
        if res[j] == 1:
            fracs.append(None)
            steps.append(0)
            continue
        u = (x - lo) * (res[j] / (hi - lo)) - 0.5
        np.clip(u, 0.0, res[j] - 1.0, out=u)
        i0 = np.minimum(u.astype(np.int64), res[j] - 2)
        fracs.append(u - i0)
        base += i0 * strides[j]
        steps.append(int(strides[j]))
    # gather the 2^n corners, then collapse one axis at a time
    corners = [vflat[base]]
    for j in range(f.n):
        corners = corners + [vflat[base + off + steps[j]] if steps[j] else c
                             for c, off in zip(corners, _offsets(steps[:j]))]
    for j in range(f.n - 1, -1, -1):
        half = len(corners) // 2
        w = fracs[j]
        if w is None:
            corners = corners[:half]
        else:
            corners = [a + w * (b - a) for a, b in zip(corners[:half], corners[half:])]
    out = corners[0]
    out = np.where(inside, out, 0)
    return out.reshape(pts.shape[:-1])


def _offsets(steps: Sequence[int]) -> list[int]:
    """Flat offsets of the corners built from the first ``len(steps)`` axes, in gather order."""
    offs = [0]
    for s in steps:
        offs = offs + [o + s for o in offs]
    return offs


@dataclass(frozen=True)
class TimeSampling:
    """Finite set of dilation parameters standing in for a supremum over t."""

    mode: str
    samples: np.ndarray
    interval: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size == 0:
            raise ValueError("empty time sampling")
        if np.any(s <= 0):
            raise ValueError("time samples must be positive")
        object.__setattr__(self, "samples", s)

    @classmethod
    def dense(cls, count: int = 513, lo: float = 1.0, hi: float = 2.0) -> "TimeSampling":
        if count < 1:
            raise ValueError("empty time sampling")
        return cls("dense", np.linspace(lo, hi, count), (lo, hi))

    @classmethod
    def per_unit(cls, density: int = 512) -> "TimeSampling":
        """Dense sampling of [1, 2] with ``density`` intervals."""
        return cls.dense(density + 1)

    @classmethod
    def dyadic_blocks(cls, k_min: int, k_max: int, per_block: int, m: int = 0) -> "TimeSampling":
        blocks = [np.linspace(2.0 ** (k - m - 1), 2.0 ** (k - m), per_block) for k in range(k_min, k_max + 1)]
        return cls("dyadic_blocks", np.unique(np.concatenate(blocks)),
                   (2.0 ** (k_min - m - 1), 2.0 ** (k_max - m)))

    def scaled(self, c: float) -> "TimeSampling":
        lo, hi = self.interval
        return TimeSampling(self.mode, self.samples * c, (lo * c, hi * c))

    def refined(self) -> "TimeSampling":
        """Superset sampling: every gap halved."""
        s = self.samples
        mids = (s[:-1] + s[1:]) / 2
        return TimeSampling(self.mode, np.concatenate([s, mids]), self.interval)


def _midpoints(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def _monotone_height(spec: SurfaceSpec, cutoff: Cutoff):
    """``(phi0, c)`` when the curve height is ``phi0 x**d + c`` on a support inside ``x >= 0``."""
    if spec.param_dim != 1 or cutoff.support()[0][0] < 0:
        return None
    if spec.family is Family.HOMOGENEOUS_CURVE:
        return 1.0, 0.0
    if len(spec.phi_coeffs) == 1:
        return spec.phi_coeffs[0], spec.offset
    return None


def _average_batch(spec: SurfaceSpec, cutoff: Cutoff, f: GridFunction, ts: np.ndarray,
                   y: np.ndarray, nodes: int) -> np.ndarray:
    """``A_t f(y)`` for ``y`` of shape (M, n) and ``ts`` of shape (T,); returns (M, T)."""
    b = spec.dilation.as_floats()
    scale = ts[:, None] ** b[None, :]  # (T, n)
    sup = cutoff.support()
    lo1, hi1 = sup[0]
    # clip x1 to the preimage of f's box under the first coordinate
    a = (y[:, None, 0] - f.box.upper[0]) / scale[None, :, 0]
    c = (y[:, None, 0] - f.box.lower[0]) / scale[None, :, 0]
    xa = np.clip(a, lo1, hi1)
    xb = np.clip(c, lo1, hi1)
    mono = _monotone_height(spec, cutoff)
    if mono is not None:
        # the height x**d * phi0 + c is monotone on the support: clip by coordinate 2 too
        phi0, off = mono
        lo_h = (y[:, None, 1] - f.box.upper[1]) / scale[None, :, 1]
        hi_h = (y[:, None, 1] - f.box.lower[1]) / scale[None, :, 1]
        u = np.sort(np.stack([(lo_h - off) / phi0, (hi_h - off) / phi0]), axis=0)
        empty = u[1] < 0
        xlo = np.maximum(u[0], 0.0) ** (1.0 / spec.d)
        xhi = np.maximum(u[1], 0.0) ** (1.0 / spec.d)
        xa = np.maximum(xa, xlo)
        xb = np.where(empty, xa, np.minimum(xb, xhi))
    length = np.maximum(xb - xa, 0.0)  # (M, T)
    u = _midpoints(nodes)
    x1 = xa[..., None] + length[..., None] * u  # (M, T, N)
    if spec.param_dim == 1:
        params = x1[..., None]
        cell = length[..., None] / nodes
    else:
        lo2, hi2 = sup[1]
        x2 = lo2 + (hi2 - lo2) * u
        x1b, x2b = np.broadcast_arrays(x1[..., :, None], x2)
        params = np.stack([x1b, x2b], axis=-1).reshape(*x1.shape[:2], -1, 2)
        cell = (length[..., None] / nodes) * ((hi2 - lo2) / nodes)
    weights = cutoff(params) * cell  # (M, T, P)
    gamma = surface_points(spec, params)  # (M, T, P, n)
    pts = y[:, None, None, :] - scale[None, :, None, :] * gamma
    vals = interpolate(f, pts)
    return np.sum(vals * weights, axis=-1)


def average_many(spec: SurfaceSpec, cutoff: Cutoff, f: GridFunction, ts, y,
                 nodes: int = DEFAULT_NODES) -> np.ndarray:
    """``A_t f(y)`` for every ``y`` (shape (..., n)) and every ``t``; result (..., T)."""
    if any(r < 2 for r in f.resolution):
        raise ValueError("degenerate grid: need at least two samples per axis")
    if f.n != spec.ambient_dim:
        raise ValueError("grid dimension does not match the surface")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    lead = y.shape[:-1]
    flat = y.reshape(-1, f.n)
    per_y = ts.size * nodes ** spec.param_dim
    step = max(1, CHUNK_POINTS // per_y)
    out = np.empty((flat.shape[0], ts.size), dtype=np.result_type(f.values, float))
    for s in range(0, flat.shape[0], step):
        out[s : s + step] = _average_batch(spec, cutoff, f, ts, flat[s : s + step], nodes)
    return out.reshape(*lead, ts.size)


def average(spec: SurfaceSpec, cutoff: Cutoff, f: GridFunction, t: float, y,
            nodes: int = DEFAULT_NODES) -> float:
    if not t > 0:
        raise ValueError("t must be positive")
    return float(average_many(spec, cutoff, f, [t], np.asarray(y, dtype=float)[None, :], nodes)[0, 0])


def local_max(spec, cutoff, f, y, ts: TimeSampling, nodes: int = DEFAULT_NODES):
    """``max_t |A_t f(y)|`` over the sampling; ``y`` may be a single point or an array."""
    y = np.asarray(y, dtype=float)
    vals = np.abs(average_many(spec, cutoff, f, ts.samples, y, nodes))
    out = vals.max(axis=-1)
    return float(out) if y.ndim == 1 else out


def support_reach(spec: SurfaceSpec, cutoff: Cutoff, samples: int = 2049) -> np.ndarray:
    """``R_j = max |Gamma_j|`` over the support of the cutoff."""
    axes = [np.linspace(lo, hi, samples if spec.param_dim == 1 else 129) for lo, hi in cutoff.support()]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    g = surface_points(spec, grid).reshape(-1, spec.ambient_dim)
    return np.abs(g).max(axis=0)


def block_offset(spec: SurfaceSpec, cutoff: Cutoff, k_range: Sequence[int]) -> int:
    """Smallest m with ``t**b_j R_j <= side_j(k) / 4`` for every t in every block."""
    reach = support_reach(spec, cutoff)
    b = spec.dilation.normalized
    for m in range(-64, 65):
        ok = True
        for k in k_range:
            t_hi = 2.0 ** (k - m)
            for j, bj in enumerate(b):
                side = 2.0 ** exact_ceil(k * bj)
                if t_hi ** float(bj) * reach[j] > side / 4:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return m
    raise ValueError("no admissible block offset in [-64, 64]")


def block_sampling(spec, cutoff, k_range: Sequence[int], per_block: int = 256) -> TimeSampling:
    k_range = list(k_range)
    if not k_range:
        raise ValueError("empty scale range")
    m = block_offset(spec, cutoff, k_range)
    return TimeSampling.dyadic_blocks(min(k_range), max(k_range), per_block, m)


def global_max(spec, cutoff, f, y, k_range: Sequence[int], per_block: int = 256,
               nodes: int = DEFAULT_NODES):
    """Supremum over the dyadic blocks ``[2**(k-m-1), 2**(k-m)]`` for ``k`` in ``k_range``."""
    return local_max(spec, cutoff, f, y, block_sampling(spec, cutoff, k_range, per_block), nodes)


def lp_norm(f: GridFunction, p: float, weight: GridFunction | None = None) -> float:
    """Riemann-sum ``(sum |f|^p w * cell)^(1/p)``; ``p = inf`` gives the (weighted-support) max."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(f.values)
    if weight is not None and weight.resolution != f.resolution:
        raise ValueError("weight grid does not match")
    if math.isinf(p):
        if weight is not None:
            v = np.where(weight.values > 0, v, 0.0)
        return float(v.max())
    # factor out the largest magnitude so |f|^p neither underflows nor overflows
    m = float(v.max()) if v.size else 0.0
    if m == 0.0 or not math.isfinite(m):
        m = 1.0
    term = (v / m) ** p
    if weight is not None:
        term = term * weight.values
    return m * float(np.sum(term) * f.cell_measure) ** (1.0 / p)


def eval_grid(eval_box: MeasuredBox, eval_resolution: Sequence[int]) -> GridFunction:
    return GridFunction.zeros(eval_box, eval_resolution)


def maximal_on_grid(spec, cutoff, f, ts: TimeSampling, eval_box, eval_resolution,
                    nodes: int = DEFAULT_NODES) -> GridFunction:
    g = eval_grid(eval_box, eval_resolution)
    return g.with_values(local_max(spec, cutoff, f, g.centers(), ts, nodes))


def norm_ratio(spec, cutoff, f, p, q, ts: TimeSampling, eval_box: MeasuredBox,
               eval_resolution: Sequence[int], nodes: int = DEFAULT_NODES) -> float:
    """``||max_t |A_t f| ||_{L^q(eval_box)} / ||f||_p``."""
    den = lp_norm(f, p)
    if den == 0:
        raise ZeroDivisionError("f has zero L^p norm")
    mf = maximal_on_grid(spec, cutoff, f, ts, eval_box, eval_resolution, nodes)
    return lp_norm(mf, q) / den


def rescale(f: GridFunction, k: int, d: int, p: float) -> GridFunction:
    """``T_k f(x) = 2**((d+1)k/p) f(2**k x1, 2**(dk) x2)``, an L^p isometry."""
    if f.n != 2:
        raise ValueError("rescaling is defined for planar grids")
    s = np.array([2.0 ** -k, 2.0 ** (-d * k)])
    box = MeasuredBox(tuple(np.asarray(f.box.lower) * s), tuple(np.asarray(f.box.upper) * s))
    return GridFunction(box, f.values * 2.0 ** ((d + 1) * k / p))


def scale_box(box: MeasuredBox, factors: Sequence[float]) -> MeasuredBox:
    s = np.asarray(factors, dtype=float)
    return MeasuredBox(tuple(np.asarray(box.lower) * s), tuple(np.asarray(box.upper) * s))


def continuity_diff_norm(spec, cutoff, f, z, q, ts: TimeSampling, eval_box: MeasuredBox,
                         eval_resolution: Sequence[int], p: float | None = None,
                         nodes: int = DEFAULT_NODES) -> float:
    """``|| max_t |A_t f(. + z) - A_t f(.)| ||_{L^q(eval_box)}``.

    With ``p`` given the result is divided by ``||f||_p``.
    """
    g = eval_grid(eval_box, eval_resolution)
    y = g.centers()
    z = np.asarray(z, dtype=float)
    base = average_many(spec, cutoff, f, ts.samples, y, nodes)
    moved = average_many(spec, cutoff, f, ts.samples, y + z, nodes)
    diff = g.with_values(np.abs(moved - base).max(axis=-1))
    out = lp_norm(diff, q)
    if p is not None:
        out /= lp_norm(f, p)
    return out


def line_average(f: GridFunction, d: int, y, nodes: int = DEFAULT_NODES) -> float:
    """``int_0^1 f(y1 - x, y2 - x**d) dx`` by the midpoint rule."""
    x = _midpoints(nodes)
    y = np.asarray(y, dtype=float)
    pts = np.stack([y[0] - x, y[1] - x**d], axis=-1)
    return float(np.mean(interpolate(f, pts)))


def transference_lower(spec: SurfaceSpec, f: GridFunction, y, ts: TimeSampling | None = None,
                       tol: float = 1e-9, nodes: int = DEFAULT_NODES) -> bool:
    """Check ``|int_0^1 f(y1 - x, y2 - x**d) dx| <= max_{t in [1,2]} |A_t f(y)|``."""
    if spec.family is not Family.HOMOGENEOUS_CURVE:
        raise ValueError("transference is stated for the homogeneous curve")
    ts = ts or TimeSampling.per_unit()
    direct = abs(line_average(f, spec.d, y, nodes))
    lm = local_max(spec, Cutoff.unit_indicator(), f, y, ts, nodes)
    return direct <= lm + tol
