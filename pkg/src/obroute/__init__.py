"""Oblivious routing on capacitated graphs via random walks.

The package builds demand-independent routing policies from the graph's random
walk: a splittable edge-flow policy (diffuse k steps, regather k steps), a
single-path policy over a sampled space of walk pairs, and a synchronous packet
simulator for permutation traffic, together with an LP congestion oracle and
statistical verification harnesses.
"""

from .errors import (
    BudgetExceededError,
    DemandError,
    DisconnectedGraphError,
    GraphInputError,
    SimulationError,
)
from .evaluation import (
    CongestionReport,
    OptResult,
    PerformanceReport,
    adjacency_demand,
    canonical_demand,
    chernoff_check,
    opt_congestion,
    opt_lower_bound_degree,
    opt_or_bound,
    performance_ratio,
    permutation_demand,
    random_demand,
    uniform_demand,
)
from .graph import (
    Edge,
    Graph,
    build_graph,
    complete,
    cycle,
    generate,
    grid,
    hypercube,
    load_graph,
    parse_edge_list,
    random_regular,
    unit_capacity_expansion,
)
from .packetsim import (
    DelayStatistics,
    PermutationRun,
    SimulationResult,
    capacity_invariant_ok,
    coincidence_count,
    delay_statistics,
    route_permutation,
    simulate,
)
from .sampler import (
    EdgeLoad,
    LoadStatistics,
    PathSpace,
    TwoLegPath,
    build_sample_space,
    draw_leg_assignment,
    edge_load,
    load_statistics,
    select_path,
    tail_threshold,
    walk_budget,
)
from .spectral import (
    SpectralProfile,
    lazify,
    lazify_if_needed,
    mixing_steps,
    routing_profile,
    spectral,
    stationary_distribution,
    walk_eigenvalues,
)
from .splittable import (
    SequentialTrace,
    SplittableRouter,
    compute_policy,
    congestion,
    cycle_mass,
    pointwise_mul,
    reverse_operator,
    row_norm,
    rw_congestion,
    sequential_congestion,
)
from .unsplittable import (
    NormalizedDemandProfile,
    OrderedDemandView,
    RatioAudit,
    UnsplittablePolicy,
    UnsplittableRouter,
    build_policy,
    normalized_profile,
    ordered_view,
    rank_tail_statistics,
    rank_wave_loads,
    ratio_audit,
    unsplittable_congestion,
    unsplittable_load,
)
from .util import substream

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "DemandError",
    "DisconnectedGraphError",
    "GraphInputError",
    "SimulationError",
    "CongestionReport",
    "OptResult",
    "PerformanceReport",
    "adjacency_demand",
    "canonical_demand",
    "chernoff_check",
    "opt_congestion",
    "opt_lower_bound_degree",
    "opt_or_bound",
    "performance_ratio",
    "permutation_demand",
    "random_demand",
    "uniform_demand",
    "Edge",
    "Graph",
    "build_graph",
    "complete",
    "cycle",
    "generate",
    "grid",
    "hypercube",
    "load_graph",
    "parse_edge_list",
    "random_regular",
    "unit_capacity_expansion",
    "DelayStatistics",
    "PermutationRun",
    "SimulationResult",
    "capacity_invariant_ok",
    "coincidence_count",
    "delay_statistics",
    "route_permutation",
    "simulate",
    "EdgeLoad",
    "LoadStatistics",
    "PathSpace",
    "TwoLegPath",
    "build_sample_space",
    "draw_leg_assignment",
    "edge_load",
    "load_statistics",
    "select_path",
    "tail_threshold",
    "walk_budget",
    "SpectralProfile",
    "lazify",
    "lazify_if_needed",
    "mixing_steps",
    "routing_profile",
    "spectral",
    "stationary_distribution",
    "walk_eigenvalues",
    "SequentialTrace",
    "SplittableRouter",
    "compute_policy",
    "congestion",
    "cycle_mass",
    "pointwise_mul",
    "reverse_operator",
    "row_norm",
    "rw_congestion",
    "sequential_congestion",
    "NormalizedDemandProfile",
    "OrderedDemandView",
    "RatioAudit",
    "UnsplittablePolicy",
    "UnsplittableRouter",
    "build_policy",
    "normalized_profile",
    "ordered_view",
    "rank_tail_statistics",
    "rank_wave_loads",
    "ratio_audit",
    "unsplittable_congestion",
    "unsplittable_load",
    "substream",
    "__version__",
]
