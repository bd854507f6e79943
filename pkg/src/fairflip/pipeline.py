"""End-to-end repair: relax, collapse, round, then claw back flips.

The main entry points are iflipper_repair (the LP pipeline with its
feasibility guarantee) and repair (a dispatcher over all methods that
returns uniform reports).
"""

from __future__ import annotations

import time
from typing import Optional, Tuple

import numpy as np

from .core import (
    Dataset,
    LabelVector,
    RepairConfig,
    RepairReport,
    SimilarityGraph,
    UnknownMethodError,
    validate_graph,
)
from .baselines import (
    GradientConfig,
    gradient_repair,
    greedy_repair,
    ilp_exact_repair,
    kmeans_repair,
)
from .lp import build_lp, solve_lp
from .metrics import num_flips, total_error
from .rounding import adaptive_round, reverse_greedy
from .transform import convert_solution

_EXHAUSTIVE_LIMIT = 22


def iflipper_repair(labels, graph: SimilarityGraph, m: float,
                    config: Optional[RepairConfig] = None,
                    solver=None) -> Tuple[LabelVector, RepairReport]:
    """Relaxation pipeline: solve LP, collapse to {0, alpha, 1}, round, unflip.

    The output always satisfies total_error <= m; the report carries the
    relaxed objective, the flip count straight after rounding, and the
    rounding gap bound.
    """
    labels = labels if isinstance(labels, LabelVector) else LabelVector.fresh(labels)
    config = config or RepairConfig(m=m)
    original = labels.current
    validate_graph(graph, original.shape[0])
    t0 = time.perf_counter()
    initial_error = total_error(original, graph)

    if initial_error <= m + config.solver_tolerance:
        result = LabelVector(current=original.copy(), original=original)
        return result, RepairReport.build(
            "iflipper", m, initial_error, initial_error, 0,
            runtime_ms=1000 * (time.perf_counter() - t0),
            solver_tolerance=config.solver_tolerance,
            lp_objective=0.0, rounding_flips=0, bound_c=0.0)

    problem = build_lp(graph, original, m)
    relaxed = solve_lp(problem, solver, solver_tolerance=config.solver_tolerance)
    collapsed = convert_solution(relaxed, original, graph,
                                 eps=config.value_merge_epsilon)
    rounded, summary = adaptive_round(collapsed, original, graph, m,
                                      eps=config.value_merge_epsilon)
    rounding_flips = num_flips(rounded)
    final = reverse_greedy(rounded, graph, m)
    final_error = total_error(final.current, graph)
    report = RepairReport.build(
        "iflipper", m, initial_error, final_error, num_flips(final),
        runtime_ms=1000 * (time.perf_counter() - t0),
        solver_tolerance=config.solver_tolerance,
        lp_objective=relaxed.objective,
        rounding_flips=rounding_flips,
        bound_c=summary.gap_bound,
        alpha=summary.alpha,
    )
    return final, report


def repair(data, graph: SimilarityGraph, m: float,
           config: Optional[RepairConfig] = None,
           gradient_config: Optional[GradientConfig] = None,
           k_range=None, solver=None) -> Tuple[LabelVector, RepairReport]:
    """Dispatch to the configured repair method with a uniform report.

    ``data`` may be a Dataset (required for kmeans), a LabelVector, or a
    plain 0/1 vector.
    """
    config = config or RepairConfig(m=m)
    dataset = data if isinstance(data, Dataset) else None
    if dataset is not None:
        labels = LabelVector.fresh(dataset.labels)
    elif isinstance(data, LabelVector):
        labels = data
    else:
        labels = LabelVector.fresh(data)
    original = labels.current
    validate_graph(graph, original.shape[0])
    initial_error = total_error(original, graph)

    method = config.method
    t0 = time.perf_counter()
    extra = {}
    if method == "iflipper":
        return iflipper_repair(labels, graph, m, config, solver=solver)
    if method == "greedy":
        result, _feasible = greedy_repair(labels, graph, m)
    elif method == "gradient":
        result, _feasible = gradient_repair(labels, graph, m, gradient_config)
    elif method == "kmeans":
        if dataset is None:
            raise ValueError("kmeans repair needs a Dataset, not bare labels")
        if k_range is None:
            k_range = [k for k in (1, 2, 4, 8, 16, 32) if k <= dataset.n]
        result, _feasible, chosen_k = kmeans_repair(dataset, graph, m, k_range,
                                                    seed=config.seed)
        extra["chosen_k"] = chosen_k
    elif method == "ilp":
        mode = "exhaustive" if original.shape[0] <= _EXHAUSTIVE_LIMIT else "branch_and_bound"
        result = ilp_exact_repair(labels, graph, m, mode=mode, solver=solver)
        extra["mode"] = mode
    else:
        raise UnknownMethodError(f"unknown method {method!r}")

    final_error = total_error(result.current, graph)
    report = RepairReport.build(
        method, m, initial_error, final_error, num_flips(result),
        runtime_ms=1000 * (time.perf_counter() - t0),
        solver_tolerance=config.solver_tolerance,
        **extra,
    )
    return result, report
