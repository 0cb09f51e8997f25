"""Sparse-sampling POMDP planners (POSS, POWSS), QMDP, an exact oracle and SN-estimator bounds."""
from powss.core import (
    GenerativeOutcome,
    ProblemDefinition,
    WeightedParticleSet,
    exact_bayes_update,
    normalize_weights,
    sample_initial_particles,
)
from powss.problems import chain_test, co_tiger, get_problem
from powss.solvers import (
    QEstimates,
    SolverConfig,
    SolverKind,
    exact_q_values,
    qmdp_q_values,
    select_action,
)

__version__ = "0.1.0"
