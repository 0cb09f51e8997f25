from powss.solvers.exact import exact_q_values, exact_value, mdp_q_table, qmdp_q_values
from powss.solvers.sparse import (
    QEstimates,
    SolverConfig,
    SolverKind,
    TreeTrace,
    estimate_q,
    estimate_v,
    poss_estimate_q,
    powss_estimate_q,
    select_action,
)

__all__ = [
    "QEstimates",
    "SolverConfig",
    "SolverKind",
    "TreeTrace",
    "estimate_q",
    "estimate_v",
    "exact_q_values",
    "exact_value",
    "mdp_q_table",
    "poss_estimate_q",
    "powss_estimate_q",
    "qmdp_q_values",
    "select_action",
]
