"""Maximal averages along non-isotropically dilated curves and surfaces.

Numerical toolkit: delta-grids and shifted dyadic cubes, oscillatory Fourier
transforms of curve measures, discretized averaging and maximal operators,
exponent regions in exact arithmetic, sparse stopping-time selection, weight
characteristics and the counterexample families for the necessary conditions.
"""

__version__ = "0.1.0"

from .averaging import GridFunction, TimeSampling, average, global_max, local_max, lp_norm, norm_ratio
from .delta_grid import DeltaCube, Dilation, MeasuredBox, normalize_dilation
from .geometry import Cutoff, Family, SurfaceSpec, measure_fourier
from .regions import ExponentPoint, compare_regions, in_region, make_region

__all__ = [
    "Cutoff", "DeltaCube", "Dilation", "ExponentPoint", "Family", "GridFunction", "MeasuredBox",
    "SurfaceSpec", "TimeSampling", "__version__", "average", "compare_regions", "global_max",
    "in_region", "local_max", "lp_norm", "make_region", "measure_fourier", "norm_ratio",
    "normalize_dilation",
]
