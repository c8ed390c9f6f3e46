"""Robust, sparse penalized M-estimators for logistic regression."""

__version__ = "0.1.0"

from .asymptotics import SandwichResult, sandwich_covariance, wald_intervals
from .crossval import Criterion, CvConfig, CvResult, cross_validate, default_lambda_grid
from .losses import (
    InformationMatrices, LossKind, LossSpec, SingularInformation, information_matrices,
)
from .optimizer import (
    Dataset, FitConfig, FitResult, fit, fit_path, initial_estimator, null_start, objective,
)
from .penalties import PenaltyFamily, PenaltySpec, penalty_value
from .simulate import EstimatorSpec, ScenarioSpec, generate, run_experiment
from .weights import hard_rejection_weights, l1_median, robust_location_scatter
