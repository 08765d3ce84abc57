"""Hopf-Lax semigroups, c-convexity and transport/log-Sobolev inequalities on finite metric spaces."""

from .constants import a_p, beta_p, ell_schedule, kappa_p, phi, psi_p, theta_p
from .convexity import (
    c_convexify,
    c_gradient_minus,
    c_gradient_plus,
    is_c_convex,
    slope_minus,
    slope_plus,
    slopes,
    subdifferential,
)
from .costs import CostFunction, cost_from_document, linear_capped, power, tabulated
from .errors import HopflaxError, ParseError, ValidationError
from .hopf_lax import (
    dP_dt_minus,
    dP_dt_plus,
    dQ_dt_plus,
    extremizer_set,
    inf_convolution,
    q_lambda,
    sup_convolution,
    time_derivatives,
)
from .inequalities import (
    InequalityReport,
    ScheduleParams,
    constant_chain_audit,
    derivative_formula_H,
    estimate_lsi_constant,
    estimate_tp_constant,
    hypercontractivity_profile,
    lemma_adieupec_gap,
    lsi_ratio,
    poincare_check,
    restricted_lsi_check,
    tau_lsi_check,
)
from .measures import ProbMeasure, entropy_functional, point_mass, relative_entropy, uniform
from .metric_space import MetricSpace, build_graph_space, build_grid_space, build_matrix_space
from .transport import TransportPlan, bobkov_gotze_gap, ot_cost

__version__ = "0.1.0"
