"""Beam/user selection on the matrix-weight bipartite graph."""

from .acs import (
    ScalarGraph,
    baseline_acs_milp,
    matching_size,
    matrix_graph,
    scalar_graph_from_matrix,
    solve_acs_milp,
)
from .baselines import baseline_jsdm, baseline_no_selection, k_medoids
from .graph import (
    LOG_FLOOR,
    BeamUserGraph,
    ProfitCost,
    Selection,
    build_graph,
    evaluate_phi,
    is_feasible,
    profit_cost,
    top_np_mask,
)
from .greedy import greedy_mdacs

__all__ = [
    "LOG_FLOOR", "BeamUserGraph", "ProfitCost", "ScalarGraph", "Selection",
    "baseline_acs_milp", "baseline_jsdm", "baseline_no_selection", "build_graph",
    "evaluate_phi", "greedy_mdacs", "is_feasible", "k_medoids", "matching_size",
    "matrix_graph", "profit_cost", "scalar_graph_from_matrix", "solve_acs_milp",
    "top_np_mask",
]
