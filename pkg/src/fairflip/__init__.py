"""Minimal label flipping for individually fair binary training data.

Given a similarity graph over training examples and a budget m on the
similarity-weighted disagreement between connected pairs, the package flips
as few labels as possible so the total disagreement drops below m, plus
baselines and an evaluation harness around that core.
"""

from .core import (
    Dataset,
    FractionalSolution,
    LabelVector,
    RepairConfig,
    RepairError,
    RepairReport,
    SimilarityGraph,
    apply_flips,
    validate_graph,
)
from .similarity import (
    CandidatePairs,
    SimilarityConfig,
    build_graph,
    build_knn_graph,
    build_threshold_graph,
    exact_candidate_pairs,
    lsh_candidate_pairs,
)
from .metrics import (
    PredictionVector,
    consistency_score,
    data_consistency,
    fractional_total_error,
    num_flips,
    total_error,
)
from .lp import LpProblem, ScipyLpSolver, SimplexLpSolver, build_lp, solve_lp, write_lp_text
from .transform import (
    ClusterInfo,
    convert_solution,
    summarize_clusters,
    transform_one_cluster,
    transform_two_clusters,
)
from .rounding import RoundingSummary, adaptive_round, optimality_gap_bound, reverse_greedy
from .baselines import (
    GradientConfig,
    gradient_repair,
    greedy_repair,
    ilp_exact_repair,
    kmeans_repair,
)
from .pipeline import iflipper_repair, repair
from .harness import (
    ExperimentSpec,
    binary_search_m,
    emit_report,
    generate_synthetic,
    load_csv,
    run_experiment,
    save_csv,
    train_and_score,
)

__version__ = "0.1.0"
