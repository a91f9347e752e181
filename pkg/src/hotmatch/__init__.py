"""Node matching for attributed graphs via hierarchical optimal transport.

The matcher builds several relational views of each graph (adjacency,
attribute similarity, smoothed-attribute similarity), solves a transport
problem for every cross-graph pair of views, and couples those solutions
through a second, modality-level transport problem whose marginals are
learned by multiplicative gradient steps.
"""

from .errors import GraphParseError, InternalConsistencyError, NumericInstabilityError
from .graphs import (
    Alignment,
    Graph,
    NoiseSpec,
    load_alignment,
    load_graph,
    permute_graph,
    perturb_edges,
    save_graph,
)
from .gw import (
    GwConfig,
    GwMatrix,
    GwResult,
    TransportPlan,
    gw_cost,
    gw_distance_matrix,
    independence_plan,
    solve_gw,
    uniform_marginal,
)
from .metrics import MatchReport, node_correctness
from .pipeline import (
    DhotConfig,
    MatchResult,
    aggregate,
    linear_fusion_baseline,
    match,
    result_to_dict,
    result_to_json,
    single_modal_baseline,
)
from .relational import (
    RelationalSet,
    build_relational_set,
    message_pass,
    normalize_rows,
    propagation_operator,
)
from .sweep import METHODS, run_noise_sweep, write_sweep_csv
from .synthetic import KINDS, generate_synthetic
from .upper import (
    ModalityCoupling,
    entropic_wasserstein,
    marginal_gradient,
    project_simplex,
    update_marginals,
)

__all__ = [
    "Alignment",
    "DhotConfig",
    "Graph",
    "GraphParseError",
    "GwConfig",
    "GwMatrix",
    "GwResult",
    "InternalConsistencyError",
    "KINDS",
    "MatchReport",
    "MatchResult",
    "METHODS",
    "ModalityCoupling",
    "NoiseSpec",
    "NumericInstabilityError",
    "RelationalSet",
    "TransportPlan",
    "aggregate",
    "build_relational_set",
    "entropic_wasserstein",
    "generate_synthetic",
    "gw_cost",
    "gw_distance_matrix",
    "independence_plan",
    "linear_fusion_baseline",
    "load_alignment",
    "load_graph",
    "marginal_gradient",
    "match",
    "message_pass",
    "node_correctness",
    "normalize_rows",
    "permute_graph",
    "perturb_edges",
    "project_simplex",
    "propagation_operator",
    "result_to_dict",
    "result_to_json",
    "run_noise_sweep",
    "save_graph",
    "single_modal_baseline",
    "solve_gw",
    "uniform_marginal",
    "update_marginals",
    "write_sweep_csv",
]

__version__ = "0.1.0"
