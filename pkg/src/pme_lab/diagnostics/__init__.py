"""Refinement trends, singular-set estimators, measure identification and inequality checks."""

from .checks import (
    caccioppoli_check,
    harnack_check,
    log_caccioppoli_check,
    sobolev_check,
    sobolev_exponent,
    weak_harnack_check,
    with_stability,
)
from .infinity import infinity_set_full, infinity_set_vertical, is_all_or_nothing
from .measure import CutoffFunction, DiracEstimate, TestFunction, default_bumps, dirac_mass_estimate, measure_functional
from .quadrature import Region, graded_nodes, spacetime_integral, spatial_integral
from .rates import RateFit, blowup_rate_fit, minorant_check
from .trends import classify, gradient_lq_trend, lq_spacetime_trend, max_trend, slice_sup_trend

__all__ = [
    "CutoffFunction",
    "DiracEstimate",
    "RateFit",
    "Region",
    "TestFunction",
    "blowup_rate_fit",
    "caccioppoli_check",
    "classify",
    "default_bumps",
    "dirac_mass_estimate",
    "gradient_lq_trend",
    "graded_nodes",
    "harnack_check",
    "infinity_set_full",
    "infinity_set_vertical",
    "is_all_or_nothing",
    "log_caccioppoli_check",
    "lq_spacetime_trend",
    "max_trend",
    "measure_functional",
    "minorant_check",
    "slice_sup_trend",
    "sobolev_check",
    "sobolev_exponent",
    "spacetime_integral",
    "spatial_integral",
    "weak_harnack_check",
    "with_stability",
]
