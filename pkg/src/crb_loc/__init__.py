"""Cramer-Rao bounds for range-based localization with randomly biased ranges."""

from .bias_models import Gaussian, PiecewiseConstant, PointMass, Uniform, table_one_pdf
from .crb_core import CoeffMode, CrbResult, Fim, crb, fim
from .estimators import EstimateResult, EstimatorConfig, ml_informed, ml_joint
from .experiments import run_bound_sweep, run_ml_mse, sample_measurements, trial_rng
from .geometry import Scenario, make_scenario, validate
from .quadrature import QuadratureSpec, integrate

__version__ = "0.1.0"

__all__ = [
    "CoeffMode",
    "CrbResult",
    "EstimateResult",
    "EstimatorConfig",
    "Fim",
    "Gaussian",
    "PiecewiseConstant",
    "PointMass",
    "QuadratureSpec",
    "Scenario",
    "Uniform",
    "crb",
    "fim",
    "integrate",
    "make_scenario",
    "ml_informed",
    "ml_joint",
    "run_bound_sweep",
    "run_ml_mse",
    "sample_measurements",
    "table_one_pdf",
    "trial_rng",
    "validate",
]
