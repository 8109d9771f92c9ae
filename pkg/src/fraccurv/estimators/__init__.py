"""Dimension and curvature estimators, periodogram tools and diagnostics."""

from .boxcount import box_count_dimension, box_counts
from .diagnostics import DesignEigen, design_eigen, design_matrix, exceedance_bound
from .regression import (
    DegenerateDesign,
    LreResult,
    NreResult,
    check_halfdim_relation,
    lre_fit,
    nre_fit,
    per_index_slopes,
    seasonal_curvature,
)
from .spectral import NoSignificantPeriod, Periodogram, detrend, estimate_m, estimate_period, periodogram

__all__ = [
    "box_count_dimension",
    "box_counts",
    "DesignEigen",
    "design_eigen",
    "design_matrix",
    "exceedance_bound",
    "DegenerateDesign",
    "LreResult",
    "NreResult",
    "check_halfdim_relation",
    "lre_fit",
    "nre_fit",
    "per_index_slopes",
    "seasonal_curvature",
    "NoSignificantPeriod",
    "Periodogram",
    "detrend",
    "estimate_m",
    "estimate_period",
    "periodogram",
]
