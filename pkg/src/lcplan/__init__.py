"""Budgeted planning of inter-robot observation exchange and match verification.

Given a candidate-match graph between robot observations, the planners select
which observations to broadcast and which candidate matches to verify so a
monotone submodular performance metric is maximized under communication and
verification budgets, with provable approximation factors and optimality
certificates.
"""

from .errors import (
    DegenerateData,
    DegenerateWorld,
    DimensionMismatch,
    Disconnected,
    FileFormatError,
    GraphError,
    InfeasiblePlan,
    InstanceTooLarge,
    LcplanError,
    NotPositiveDefinite,
)
from .graph import (
    Budget,
    Edge,
    ExchangeGraph,
    Feasibility,
    PerBlockCount,
    PerPairVerifications,
    PerRobotVerifications,
    Plan,
    TotalBytes,
    TotalCount,
    TotalVerifications,
    Vertex,
    build_graph,
    check_feasible,
    make_plan,
    min_vertex_cover_size,
)
from .modular import (
    InnerSolution,
    allocate_pairwise_budgets,
    blockwise_top_k,
    inner_top_k,
    modular_greedy_iu,
    modular_greedy_pairwise,
    modular_greedy_tn,
    modular_greedy_tu,
    pairwise_top_k,
)
from .objectives import (
    InfoContext,
    NlcObjective,
    Objective,
    PoseGraphContext,
    expected_log_tree_count,
    fim_eval,
    make_objective,
    marginal_gain,
    nlc_eval,
    wst_eval,
)
from .place_recognition import (
    Descriptor,
    FitConfig,
    LabeledPair,
    LogisticModel,
    build_exchange_graph,
    euclidean_distance,
    fit_logistic,
    precision_recall,
    predict_probability,
)
from .certify import (
    Certificate,
    FractionalSolution,
    brute_force_opt,
    brute_force_opt_grid,
    fw_relax_logdet,
    fw_relax_tree_connectivity,
    lp_relax_modular,
    round_fractional,
)
from .simulate import (
    ExecutionOutcome,
    SimConfig,
    SyntheticWorld,
    gen_world,
    random_baseline,
    realize_and_evaluate,
    realize_ground_truth,
)
from .submodular import (
    GuaranteeReport,
    edge_greedy,
    guarantee_alpha,
    submodular_greedy,
    vertex_greedy,
)

__version__ = "0.1.0"
