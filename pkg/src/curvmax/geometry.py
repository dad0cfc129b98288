"""Curves and surfaces, the cutoff, and oscillatory Fourier transforms of
curve-carried measures.

Curves are parametrized by ``x -> (x, x**d * phi(x) + c)``; surfaces by
``(x1, x2) -> (x1, x2, c + x2**d * phi(x2))``.  ``phi`` is stored as a
Taylor coefficient list ``phi(x) = sum_j coeffs[j] * x**j``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .delta_grid import Dilation, normalize_dilation


class Family(str, Enum):
    FINITE_TYPE_CURVE = "finite_type_curve"
    HOMOGENEOUS_CURVE = "homogeneous_curve"
    PERTURBED_HOMOGENEOUS_CURVE = "perturbed_homogeneous_curve"
    NON_VANISHING_SURFACE = "non_vanishing_surface"
    FINITE_TYPE_SURFACE = "finite_type_surface"
    DEGENERATE_SURFACE = "degenerate_surface"

    @property
    def is_curve(self) -> bool:
        return self in _CURVES


_CURVES = {
    Family.FINITE_TYPE_CURVE,
    Family.HOMOGENEOUS_CURVE,
    Family.PERTURBED_HOMOGENEOUS_CURVE,
}
# families whose phi carries a genuine perturbation of order m
_PERTURBED = {Family.PERTURBED_HOMOGENEOUS_CURVE, Family.DEGENERATE_SURFACE}

FAMILY_ALIASES = {
    "finite": Family.FINITE_TYPE_CURVE,
    "homogeneous": Family.HOMOGENEOUS_CURVE,
    "perturbed": Family.PERTURBED_HOMOGENEOUS_CURVE,
    "nonvanishing": Family.NON_VANISHING_SURFACE,
    "finite_surface": Family.FINITE_TYPE_SURFACE,
    "degenerate": Family.DEGENERATE_SURFACE,
}

DEFAULT_SUPPORT_RADIUS = 0.125


class SpecError(ValueError):
    """Inconsistent surface specification."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error {achieved:.3e})")
        self.achieved = achieved


def parse_family(name: str | Family) -> Family:
    if isinstance(name, Family):
        return name
    key = name.strip().lower().replace("-", "_")
    if key in FAMILY_ALIASES:
        return FAMILY_ALIASES[key]
    try:
        return Family(key)
    except ValueError:
        raise SpecError(f"unknown family {name!r}") from None


def _default_exponents(family: Family, d: int) -> tuple:
    if family in (Family.HOMOGENEOUS_CURVE, Family.PERTURBED_HOMOGENEOUS_CURVE):
        return (1, d)
    if family is Family.FINITE_TYPE_CURVE:
        return (1, 1)
    if family is Family.DEGENERATE_SURFACE:
        return (1, 1, d)
    return (1, 1, 1)


def _same(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=0.0)


@dataclass(frozen=True)
class SurfaceSpec:
    family: Family
    d: int
    m: int = 1
    c: float = 0.0
    phi_coeffs: tuple[float, ...] = (1.0,)
    exponents: tuple | None = None
    support_radius: float = DEFAULT_SUPPORT_RADIUS
    dilation: Dilation = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fam = parse_family(self.family)
        object.__setattr__(self, "family", fam)
        if int(self.d) != self.d or self.d < 2:
            raise SpecError(f"type order d must be an integer >= 2, got {self.d}")
        if int(self.m) != self.m or self.m < 1:
            raise SpecError(f"perturbation order m must be an integer >= 1, got {self.m}")
        if not self.support_radius > 0:
            raise SpecError("support radius must be positive")
        coeffs = tuple(float(v) for v in self.phi_coeffs)
        if not coeffs or coeffs[0] == 0.0:
            raise SpecError("phi(0) must be nonzero")
        lower = coeffs[1 : self.m]
        if any(v != 0.0 for v in lower):
            raise SpecError(f"phi must have vanishing derivatives of order 1..{self.m - 1}")
        if fam in _PERTURBED and (len(coeffs) <= self.m or coeffs[self.m] == 0.0):
            raise SpecError(f"phi^({self.m})(0) must be nonzero for {fam.value}")
        object.__setattr__(self, "phi_coeffs", coeffs)

        exps = self.exponents if self.exponents is not None else _default_exponents(fam, self.d)
        dil = normalize_dilation(exps)
        n = 2 if fam.is_curve else 3
        if dil.n != n:
            raise SpecError(f"{fam.value} needs {n} dilation exponents, got {dil.n}")
        b = dil.normalized
        d = Fraction(self.d)
        if fam in (Family.HOMOGENEOUS_CURVE, Family.PERTURBED_HOMOGENEOUS_CURVE):
            if not (_same(b[0], 1) and _same(b[1], d)):
                raise SpecError(f"{fam.value} forces normalized exponents (1, d)")
        elif fam is Family.FINITE_TYPE_CURVE and _same(d * b[0], b[1]):
            raise SpecError("finite type curve requires d*b1 != b2")
        elif fam is Family.NON_VANISHING_SURFACE and _same(2 * b[1], b[2]):
            raise SpecError("non-vanishing surface requires 2*b2 != b3")
        elif fam is Family.FINITE_TYPE_SURFACE and _same(d * b[1], b[2]):
            raise SpecError("finite type surface requires d*b2 != b3")
        elif fam is Family.DEGENERATE_SURFACE and not _same(d * b[1], b[2]):
            raise SpecError("degenerate surface requires d*b2 == b3")
        object.__setattr__(self, "exponents", dil.exponents)
        object.__setattr__(self, "dilation", dil)

    @property
    def ambient_dim(self) -> int:
        return 2 if self.family.is_curve else 3

    @property
    def param_dim(self) -> int:
        return 1 if self.family.is_curve else 2

    @property
    def order(self) -> int:
        """Power of the degenerate coordinate (2 for the non-vanishing surface)."""
        return 2 if self.family is Family.NON_VANISHING_SURFACE else self.d

    @property
    def offset(self) -> float:
        if self.family in (Family.FINITE_TYPE_CURVE, Family.FINITE_TYPE_SURFACE):
            return float(self.c)
        return 0.0

    def phi(self, x):
        return np.polynomial.polynomial.polyval(x, self.phi_coeffs)

    def to_json(self) -> dict:
        return {
            "family": self.family.value,
            "d": self.d,
            "m": self.m,
            "c": self.c,
            "phi_coeffs": list(self.phi_coeffs),
            "exponents": [str(a) if isinstance(a, Fraction) else a for a in self.exponents],
            "support_radius": self.support_radius,
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "SurfaceSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            exps = doc.get("exponents")
            if exps is not None:
                exps = tuple(Fraction(e) if isinstance(e, (str, int)) else float(e) for e in exps)
            return cls(
                family=parse_family(doc["family"]),
                d=int(doc["d"]),
                m=int(doc.get("m", 1)),
                c=float(doc.get("c", 0.0)),
                phi_coeffs=tuple(doc.get("phi_coeffs", (1.0,))),
                exponents=exps,
                support_radius=float(doc.get("support_radius", DEFAULT_SUPPORT_RADIUS)),
            )
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed surface spec: {exc}") from exc


def surface_points(spec: SurfaceSpec, x) -> np.ndarray:
    """Vectorized ``Gamma(x)``; ``x`` has trailing axis of length ``param_dim`` (curves may omit it)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("parameter must be finite")
    if spec.family.is_curve:
        if x.ndim and x.shape[-1:] == (1,):
            x = x[..., 0]
        if spec.family is Family.HOMOGENEOUS_CURVE:
            y = x**spec.d
        else:
            y = x**spec.d * spec.phi(x) + spec.offset
        return np.stack([x, y], axis=-1)
    if x.shape[-1] != 2:
        raise ValueError("surface parameter must be 2-dimensional")
    x1, x2 = x[..., 0], x[..., 1]
    z = spec.offset + x2**spec.order * spec.phi(x2)
    return np.stack([x1, x2, z], axis=-1)


def surface_point(spec: SurfaceSpec, x) -> tuple[float, ...]:
    return tuple(float(v) for v in surface_points(spec, x))


def dilate(d: Dilation, t: float, p) -> np.ndarray:
    """``delta_t(p) = (t**a_1 p_1, ..., t**a_n p_n)`` using the raw exponents."""
    if not t > 0:
        raise ValueError(f"dilation parameter must be positive, got {t}")
    a = np.array([float(v) for v in d.exponents])
    return np.asarray(p, dtype=float) * t**a


@dataclass(frozen=True)
class Cutoff:
    """Nonnegative cutoff in the parameter variable.

    ``bump`` is ``exp(-1/(1-u**2))`` with ``u = |x - center| / radius`` (zero for
    ``u >= 1``); ``indicator`` is the indicator of the closed cube of half-side
    ``radius`` around ``center``.
    """

    radius: float = DEFAULT_SUPPORT_RADIUS
    profile: str = "bump"
    center: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cutoff radius must be positive")
        if self.profile not in ("bump", "indicator"):
            raise ValueError(f"unknown cutoff profile {self.profile!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def unit_indicator(cls, dim: int = 1) -> "Cutoff":
        """Indicator of ``[0, 1]**dim``."""
        return cls(0.5, "indicator", (0.5,) * dim)

    @classmethod
    def for_spec(cls, spec: SurfaceSpec, center=None) -> "Cutoff":
        return cls(spec.support_radius, "bump", center or (0.0,) * spec.param_dim)

    @property
    def dim(self) -> int:
        return len(self.center)

    def support(self) -> list[tuple[float, float]]:
        return [(c - self.radius, c + self.radius) for c in self.center]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        u = (x - np.asarray(self.center)) / self.radius
        if self.profile == "indicator":
            return np.all(np.abs(u) <= 1.0, axis=-1).astype(float)
        r2 = np.sum(u * u, axis=-1)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_g = np.zeros(15)
_g[[1, 3, 5]] = _WG[:3]
_g[7] = _WG[3]
_g[[13, 11, 9]] = _WG[:3]
G_WEIGHTS = _g

MAX_PANELS_1D = 1 << 16
MAX_PANELS_2D = 1 << 9


def _panel_nodes(lo: float, hi: float, n: int) -> tuple[np.ndarray, float]:
    edges = np.linspace(lo, hi, n + 1)
    half = (edges[1] - edges[0]) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    return mids[:, None] + half * GK_NODES[None, :], half


def _phase_variation(phase, support, samples: int) -> float:
    """Largest total variation of the phase along any coordinate line of the support."""
    axes = [np.linspace(lo, hi, samples) for lo, hi in support]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = phase(grid)
    return max(float(np.max(np.sum(np.abs(np.diff(vals, axis=ax)), axis=ax))) for ax in range(len(support)))


def oscillatory_integral(phase, amplitude, support, tol: float, min_panels: int = 8) -> tuple[complex, float]:
    """``int exp(-i phase(x)) amplitude(x) dx`` over a box, by composite G7/K15.

    Panels start with at most a half-turn of phase each and are doubled until
    the summed Gauss/Kronrod discrepancy is below ``tol``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    dim = len(support)
    samples = 4097 if dim == 1 else 257
    tv = _phase_variation(phase, support, samples)
    n = max(min_panels, int(math.ceil(tv / math.pi)))
    cap = MAX_PANELS_1D if dim == 1 else MAX_PANELS_2D
    n = 1 << max(0, (n - 1).bit_length())
    err = math.inf
    while n <= cap:
        if dim == 1:
            (lo, hi), = support
            x, half = _panel_nodes(lo, hi, n)
            vals = np.exp(-1j * phase(x[..., None])) * amplitude(x[..., None])
            k = half * np.sum(vals @ GK_WEIGHTS)
            g = half * np.sum(vals @ G_WEIGHTS)
            err = float(np.sum(np.abs(half * (vals @ (GK_WEIGHTS - G_WEIGHTS)))))
        else:
            (lo1, hi1), (lo2, hi2) = support
            x1, h1 = _panel_nodes(lo1, hi1, n)
            x2, h2 = _panel_nodes(lo2, hi2, n)
            pts = np.stack(np.meshgrid(x1.ravel(), x2.ravel(), indexing="ij"), axis=-1)
            vals = np.exp(-1j * phase(pts)) * amplitude(pts)
            vals = vals.reshape(n, 15, n, 15)
            kk = np.einsum("aibj,i,j->ab", vals, GK_WEIGHTS, GK_WEIGHTS) * h1 * h2
            gg = np.einsum("aibj,i,j->ab", vals, G_WEIGHTS, G_WEIGHTS) * h1 * h2
            k = np.sum(kk)
            err = float(np.sum(np.abs(kk - gg)))
        if err <= tol:
            return complex(k), err
        n *= 2
    raise QuadratureError("oscillatory quadrature did not converge", err)


def measure_fourier(spec: SurfaceSpec, cutoff: Cutoff, xi, tol: float = 1e-10) -> complex:
    """Fourier transform ``int exp(-i xi . Gamma(x)) eta(x) dx`` of the curve measure."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (spec.ambient_dim,):
        raise ValueError(f"frequency must have length {spec.ambient_dim}")
    if cutoff.dim != spec.param_dim:
        raise ValueError("cutoff dimension does not match the parameter dimension")

    def phase(x):
        return surface_points(spec, x) @ xi

    value, _ = oscillatory_integral(phase, cutoff, cutoff.support(), tol)
    return value


class StationaryPoint(NamedTuple):
    x: float
    in_support: bool


def stationary_point(s: float, d: int) -> StationaryPoint:
    """Critical point of ``-s x + x**d``; flags whether it falls in ``[1, 2]``."""
    if not s > 0:
        raise ValueError("s must be positive")
    if d < 2:
        raise ValueError("d must be at least 2")
    xc = (s / d) ** (1.0 / (d - 1))
    return StationaryPoint(xc, d <= s <= d * 2 ** (d - 1))


def phase_value(xi: Sequence[float], t: float, d: int) -> float:
    """Stationary phase value ``(d-1) t xi2 (-xi1/(d xi2))**(d/(d-1))``."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    if xi2 == 0 or not -xi1 / xi2 > 0:
        raise ValueError("phase value needs xi2 != 0 and -xi1/xi2 > 0")
    if not t > 0:
        raise ValueError("t must be positive")
    return (d - 1) * t * xi2 * (-xi1 / (d * xi2)) ** (d / (d - 1))


def decay_profile(spec, cutoff, directions, lambdas, tol=1e-10) -> np.ndarray:
    """``|mu^(lambda w)|`` for each direction (rows) and lambda (columns)."""
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    return np.array([[abs(measure_fourier(spec, cutoff, lam * w, tol)) for lam in lambdas] for w in dirs])
