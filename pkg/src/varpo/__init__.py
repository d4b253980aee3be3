"""Variance-aware policy optimization under noisy reward models."""

from .core import (
    DegenerateError,
    DiagonalCovariance,
    DimensionError,
    DomainError,
    NumericalError,
    RawPolicy,
    RewardVector,
    SimplexPolicy,
    TrustRegion,
    VarpoError,
    inverse_weighted_norm,
    lambda_min,
    weighted_norm,
)
from .optimize import (
    ClosedFormSolution,
    exp_tilt_policy,
    project_to_simplex,
    scale_epsilon,
    solve_vanilla,
    solve_variance_aware,
    surrogate_objective,
)
from .risk import (
    CoverageReport,
    RiskReport,
    analytic_risk_vanilla,
    analytic_risk_variance_aware,
    monte_carlo_risk,
    return_of,
    theorem1_coverage,
)

__version__ = "0.1.0"
