"""Explicit nonasymptotic root-MSE bounds for MCMC averages, with a regeneration simulator."""

from .bounds import (
    BoundComponents,
    ConfidencePlan,
    GeometricDriftParams,
    MomentInputs,
    PolynomialDriftParams,
    Provenance,
    combine_mse_bound,
    confidence_plan,
    geo_bounds,
    geo_complementary,
    nu_Pn_V_eta_bound,
    optimize_small_set,
    pi_J_lower,
    poly_bounds,
    poly_complementary,
)
from .numerics import RngStream, golden_min, normal_cdf, student_t_cdf

__version__ = "0.1.0"

__all__ = [
    "BoundComponents",
    "ConfidencePlan",
    "GeometricDriftParams",
    "MomentInputs",
    "PolynomialDriftParams",
    "Provenance",
    "combine_mse_bound",
    "confidence_plan",
    "geo_bounds",
    "geo_complementary",
    "nu_Pn_V_eta_bound",
    "optimize_small_set",
    "pi_J_lower",
    "poly_bounds",
    "poly_complementary",
    "RngStream",
    "golden_min",
    "normal_cdf",
    "student_t_cdf",
]
