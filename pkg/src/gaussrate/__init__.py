"""Logarithmic decay rates for exceedances of multivariate Gaussian processes."""

from .assumptions import A1Report, check_a1, check_threshold
from .decay import (
    RateResult,
    RegVarSpec,
    bounded_rate_I,
    rate_at_point,
    rate_over_domain,
    regvar_J,
    regvar_asymptotic,
    two_dim_closed_form,
)
from .models import BM, FBM, OU, CovModel, DomainGrid, DriftModel, Scaled, product_model, threshold_u0
from .montecarlo import McEstimate, estimate_crude, estimate_is, sweep
from .quadrant import QpSolution, QuadrantProblem, brute_force_active_sets, solve_quadrant, verify_saddle

__version__ = "0.1.0"
