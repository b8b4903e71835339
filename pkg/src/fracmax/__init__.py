"""Numerical experiments for fractional maximal functions of radial Sobolev functions."""

from .profiles import LineFunction, RadialProfile, lp_norm, make_line, make_profile, random_line
from .geometry import AverageTable, CapKernelContext, ball_average, build_average_table
from .maximal import MaximalResult, VariantSpec, maximal_1d, maximal_profile

__all__ = [
    "AverageTable", "CapKernelContext", "LineFunction", "MaximalResult", "RadialProfile",
    "VariantSpec", "ball_average", "build_average_table", "lp_norm", "make_line",
    "make_profile", "maximal_1d", "maximal_profile", "random_line",
]
