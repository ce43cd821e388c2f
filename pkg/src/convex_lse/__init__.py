"""Least squares over convex sets: projections, localized Gaussian complexity, risk."""

from .complexity import (
    BracketVerdict,
    ComplexityCurve,
    ConcentrationTable,
    RiskCheck,
    TmuEstimate,
    bracket_tmu,
    concentration_check,
    default_grid,
    estimate_curve,
    evaluate_M,
    risk_vs_tmu_check,
    sample_M,
    sample_t_star,
    sample_t_stars,
    solve_tmu,
    tail_bound,
)
from .errors import *  # noqa: F401,F403
from .estimation import LSE, CoordinateMean, Identity, RiskEstimate, apply, estimate_risk
from .experiments import (
    SweepReport,
    counterexample_risk,
    fit_loglog_slope,
    isotonic_sweep,
    lasso_regimes,
    lasso_sweep,
    subspace_sweep,
)
from .path import ProjectionPath
from .sets import (
    Box,
    ConstraintSet,
    CounterexampleSet,
    IsotonicCone,
    L1Ball,
    LassoImage,
    ProjectionResult,
    Subspace,
    contains,
    distance_to_set,
    from_descriptor,
    project,
)

__version__ = "0.1.0"
