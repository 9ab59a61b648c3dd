"""Scalar-bid VCG allocation of a divisible good with worst-case-optimal linear rebates."""

from .allocation import ConvergenceError, allocation_without_agent, efficient_allocation
from .equilibrium import (
    ValuationSpec,
    load_valuations,
    nash_bids,
    true_efficient_allocation,
    verify_best_response,
    verify_equilibrium_vp,
)
from .lp import LinearProgram, LPResult, LPStatus, NumericalInstabilityError, solve_lp
from .mechanism import (
    MechanismOutcome,
    RebateCoefficients,
    clarke_surplus,
    payments,
    rebate,
    rebates,
    surrogate_welfare,
    vp_deficit,
    worst_case_ratio,
)
from .rebate_design import (
    RebateDesign,
    SamplingConfig,
    XVariables,
    alpha_coefficients,
    build_scp,
    c_to_x,
    g1,
    g2,
    optimize_rebates,
    x_to_c,
)
from .sampling import (
    CoverConfig,
    TheoryConstants,
    calafiore_campi_count,
    epsilon_cover,
    estimate_violation,
    random_ordered_samples,
    theory_constants,
)
from .surrogate import UNBOUNDED_SLOPE, SurrogateSpec, check_assumptions, u_derivative, u_value

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
