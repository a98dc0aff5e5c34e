"""Confidence bands for the slope function in functional linear regression.

The slope is estimated by functional PCA; the band is a constant-width
relaxation of an L2 confidence ball that covers the slope on all but a
prescribed fraction of the interval with the nominal probability.
"""

__version__ = "0.1.0"

from .band import (
    ConfidenceBand,
    QuantileEstimate,
    ball_radius,
    build_band,
    ms_band,
    normal_approx_quantile,
    simulate_quantile,
)
from .cutoff import RiskCurve, oracle_risk_curve, risk_curve, select_cutoff
from .fpca import CovKernel, EigenSystem, eigendecompose, empirical_covariance, scores
from .grid import GridDomain, GridFunction, inner_product, make_domain, norm
from .regression import FplrDataset, FplrFit, fit, fit_partial, fit_pca, partial_out, predict

__all__ = [
    "ConfidenceBand",
    "CovKernel",
    "EigenSystem",
    "FplrDataset",
    "FplrFit",
    "GridDomain",
    "GridFunction",
    "QuantileEstimate",
    "RiskCurve",
    "ball_radius",
    "build_band",
    "eigendecompose",
    "empirical_covariance",
    "fit",
    "fit_partial",
    "fit_pca",
    "inner_product",
    "make_domain",
    "ms_band",
    "norm",
    "normal_approx_quantile",
    "oracle_risk_curve",
    "partial_out",
    "predict",
    "risk_curve",
    "scores",
    "select_cutoff",
    "simulate_quantile",
]
