"""Generalization-error bounds under train/test distribution mismatch.

A numpy/scipy library for finite-alphabet learning problems: divergence
measures, rate-limited maximum-gap curves solved by alternating
minimization, coupling-based lower bounds solved by entropic optimal
transport, closed-form bound formulas, exact enumeration of toy learners,
and a deterministic experiment runner.
"""

from ._version import __version__
from .bounds import (
    BoundReport,
    MisspecBounds,
    erm_excess_risk_bound,
    gap_lower_from_mgf,
    gen_tail_bound,
    holder_orders,
    mi_bound,
    mismatched_mi_bound,
    misspec_bounds,
    misspec_shift,
    misspec_tilt,
    per_sample_mi_bound,
    rd_converse_lower,
    renyi_holder_bound,
    subgaussian_gap_lower,
)
from .coupling import (
    Coupling,
    coupling_min_gap_at_rate,
    entropic_min_cost,
    maximal_coupling,
    ot_brute_force,
    product_coupling_gap,
)
from .errors import (
    ConfigError,
    GenBoundsError,
    InfeasibleConstraintError,
    NonConvergenceError,
    ValidationFailure,
)
from .learners import (
    AuxRiskEstimate,
    ExactJoint,
    LearnerSpec,
    constant,
    enumerate_joint,
    erm,
    erm_aux_risk_exact,
    erm_aux_risk_mc,
    exact_gen_error,
    exact_mi,
    gap_tail_prob,
    gibbs,
    output_law,
    per_sample_mi,
)
from .measures import (
    FiniteDistribution,
    JointTable,
    chi_squared,
    entropy,
    hoeffding_sigma,
    kl_divergence,
    mutual_information,
    renyi_divergence,
    tv_distance,
)
from .rd_solver import (
    GapRateSolver,
    RDCurve,
    RDPoint,
    ba_fixed_slope,
    constrained_max_gap_at_rate,
    dataset_max_gap_at_rate,
    grid_search_max_gap,
    max_gap_at_rate,
    rd_curve,
)
from .scenario import (
    GapMatrix,
    LossMatrix,
    Scenario,
    gap_matrix,
    hypothesis_grid,
    scenario,
)

__all__ = [name for name in dir() if not name.startswith("_")]
