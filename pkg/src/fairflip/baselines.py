"""Baseline repair strategies and the exact integer solver.

The greedy and gradient baselines are fast but can get stuck short of the
budget; k-means repairs by majority-labeling clusters; the exact solver
(enumeration or branch and bound over the relaxation) provides ground truth
for optimality checks.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace as dc_replace
from typing import Iterable, Optional, Tuple

import numpy as np

from .core import (
    InstanceTooLargeError,
    LabelVector,
    RepairError,
    SimilarityGraph,
    SolverFailureError,
    TimeoutError_,
)
from .lp import LpProblem, build_lp, default_solver, solve_lp
from .metrics import total_error

_FEAS_TOL = 1e-9


def _as_label_vector(labels) -> LabelVector:
    if isinstance(labels, LabelVector):
        return labels
    return LabelVector.fresh(labels)


@dataclass(frozen=True)
class GradientConfig:
    lam: Optional[float] = None          # fixed trade-off weight; None sweeps
    learning_rate: float = 0.1
    max_iters: int = 500
    rounding_threshold: float = 0.5
    lambda_sweep: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be >= 0")


def greedy_repair(labels, graph: SimilarityGraph, m: float) -> Tuple[LabelVector, bool]:
    """Flip the single most error-reducing node until the budget is met.

    Stops as soon as total error <= m, or when no single flip strictly
    reduces the error (a local minimum, in which case the result may be
    infeasible).
    """
    labels = _as_label_vector(labels)
    current = labels.current.copy()
    error = total_error(current, graph)
    adjacency = graph.adjacency()
    degree = np.asarray(adjacency.sum(axis=1)).reshape(-1)
    while error > m + _FEAS_TOL:
        neighbor_mass = adjacency @ current.astype(float)
        delta = (1 - 2 * current) * (degree - 2 * neighbor_mass)
        pick = int(np.argmin(delta))
        if delta[pick] >= 0:
            break  # no strict reduction possible
        current[pick] = 1 - current[pick]
        error = total_error(current, graph)
    return LabelVector(current=current, original=labels.original), bool(error <= m + _FEAS_TOL)


def gradient_repair(labels, graph: SimilarityGraph, m: float,
                    config: Optional[GradientConfig] = None) -> Tuple[LabelVector, bool]:
    """Projected gradient descent on flips + lam * smoothness, then rounding.

    Minimizes mean-scaled sum (y - y')^2 + lam * sum_edges w (y_u - y_v)^2
    over the [0, 1] box starting from the original labels, rounds at the
    configured threshold, and sweeps lam when none is fixed: the feasible
    result with the fewest flips wins, otherwise the lowest-error result is
    returned with feasible=False. The 1/n loss scaling leaves the minimizer
    untouched and keeps plain step sizes stable.
    """
    labels = _as_label_vector(labels)
    config = config or GradientConfig()
    original = labels.current.astype(float)
    n = original.shape[0]
    adjacency = graph.adjacency()
    degree = np.asarray(adjacency.sum(axis=1)).reshape(-1)
    lams = (config.lam,) if config.lam is not None else config.lambda_sweep

    best = None  # (infeasible, flips-or-error key, order) -> labels
    for order, lam in enumerate(lams):
        y = original.copy()
        for _ in range(config.max_iters):
            grad = (2.0 * (y - original) + 2.0 * lam * (degree * y - adjacency @ y)) / n
            y_next = np.clip(y - config.learning_rate * grad, 0.0, 1.0)
            if np.abs(y_next - y).max() < 1e-12:
                y = y_next
                break
            y = y_next
        rounded = (y >= config.rounding_threshold).astype(np.int8)
        error = total_error(rounded, graph)
        feasible = error <= m + _FEAS_TOL
        flips = int((rounded != labels.current).sum())
        key = (0, flips, order) if feasible else (1, error, order)
        if best is None or key < best[0]:
            best = (key, rounded, feasible)
    _, rounded, feasible = best
    return LabelVector(current=rounded, original=labels.original), bool(feasible)


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iters: int = 300):
    """Plain Lloyd iterations; returns assignments or None on an empty cluster."""
    n = X.shape[0]
    centers = X[rng.choice(n, size=k, replace=False)].copy()
    assign = None
    for _ in range(max_iters):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        counts = np.bincount(new_assign, minlength=k)
        if (counts == 0).any():
            return None
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            centers[c] = X[assign == c].mean(axis=0)
    return assign


def kmeans_repair(dataset, graph: SimilarityGraph, m: float,
                  k_range: Iterable[int], seed: int = 0) -> Tuple[LabelVector, bool, int]:
    """Cluster the non-excluded features and majority-label each cluster.

    Every k in k_range is tried (empty clusters re-seed up to 5 times, then
    the k is dropped); the feasible k with the fewest flips wins, otherwise
    the k with the lowest error is returned with feasible=False.
    """
    k_range = sorted({int(k) for k in k_range})
    if not k_range:
        raise ValueError("k_range must be non-empty")
    X = dataset.distance_features()
    original = dataset.labels
    n = X.shape[0]

    best = None  # (key, labels, feasible, k)
    for k in k_range:
        if k < 1 or k > n:
            continue
        assign = None
        for attempt in range(5):
            rng = np.random.default_rng([seed, k, attempt])
            assign = _lloyd(X, k, rng)
            if assign is not None:
                break
        if assign is None:
            continue
        current = np.zeros(n, dtype=np.int8)
        for c in range(k):
            members = assign == c
            # majority original label; ties go to 0
            current[members] = 1 if original[members].mean() > 0.5 else 0
        error = total_error(current, graph)
        feasible = error <= m + _FEAS_TOL
        flips = int((current != original).sum())
        key = (0, flips, k) if feasible else (1, error, k)
        if best is None or key < best[0]:
            best = (key, current, feasible, k)
    if best is None:
        raise RepairError("no k in k_range produced a clustering")
    _, current, feasible, chosen_k = best
    return LabelVector(current=current, original=original), bool(feasible), int(chosen_k)


_EXHAUSTIVE_LIMIT = 22
_CHUNK_BITS = 18


def _exhaustive_optimum(labels: np.ndarray, graph: SimilarityGraph, m: float):
    """Scan all labelings; returns (current, flips) of the first optimum."""
    n = labels.shape[0]
    best_flips = None
    best_mask = None
    head, tail, w = graph.head, graph.tail, graph.weights
    shifts = np.arange(n, dtype=np.uint64)
    total = 1 << n
    for start in range(0, total, 1 << _CHUNK_BITS):
        masks = np.arange(start, min(start + (1 << _CHUNK_BITS), total), dtype=np.uint64)
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.int8)
        err = np.zeros(masks.shape[0])
        for e in range(head.shape[0]):
            err += w[e] * (bits[:, head[e]] != bits[:, tail[e]])
        feasible = err <= m + _FEAS_TOL
        if not feasible.any():
            continue
        flips = (bits != labels[None, :]).sum(axis=1)
        flips = np.where(feasible, flips, n + 1)
        local = int(flips.argmin())
        if best_flips is None or flips[local] < best_flips:
            best_flips = int(flips[local])
            best_mask = bits[local].copy()
    return best_mask, best_flips


def _branch_and_bound_optimum(labels: np.ndarray, graph: SimilarityGraph, m: float,
                              node_cap: int, solver=None):
    """Best-first search over the relaxation, branching on the most fractional node."""
    from .core import InfeasibleError

    base = build_lp(graph, labels, m)
    n = labels.shape[0]

    def bound_of(fixes: dict):
        lower = base.lower.copy()
        upper = base.upper.copy()
        for i, v in fixes.items():
            lower[i] = upper[i] = float(v)
        problem = dc_replace(base, lower=lower, upper=upper)
        sol = solve_lp(problem, solver)
        return sol

    best_flips = None
    best_labels = None
    counter = 0
    heap = []

    def push(fixes):
        nonlocal best_flips, best_labels, counter
        try:
            sol = bound_of(fixes)
        except InfeasibleError:
            return
        y = sol.values
        frac = np.abs(y - 0.5)
        mask = np.ones(n, dtype=bool)
        for i in fixes:
            mask[i] = False
        integral = (np.minimum(y, 1 - y) < 1e-6) | ~mask
        if integral.all():
            cand = (y >= 0.5).astype(np.int8)
            for i, v in fixes.items():
                cand[i] = v
            if total_error(cand, graph) <= m + _FEAS_TOL:
                flips = int((cand != labels).sum())
                if best_flips is None or flips < best_flips:
                    best_flips, best_labels = flips, cand
                return
            # snapping broke feasibility numerically; keep branching instead
        counter += 1
        heapq.heappush(heap, (sol.objective, counter, fixes, y))

    push({})
    nodes = 0
    while heap:
        nodes += 1
        if nodes > node_cap:
            raise TimeoutError_(f"branch and bound exceeded {node_cap} nodes")
        bound, _, fixes, y = heapq.heappop(heap)
        if best_flips is not None and int(np.ceil(bound - 1e-6)) >= best_flips:
            continue
        free = [i for i in range(n) if i not in fixes]
        if not free:
            continue
        branch = min(free, key=lambda i: (abs(y[i] - 0.5), i))
        for v in (0, 1):
            child = dict(fixes)
            child[branch] = v
            push(child)
    if best_labels is None:
        raise SolverFailureError("branch and bound found no incumbent")
    return best_labels, best_flips


def ilp_exact_repair(labels, graph: SimilarityGraph, m: float,
                     mode: str = "exhaustive", node_cap: int = 100000,
                     solver=None) -> LabelVector:
    """True optimum of the integer problem: fewest flips with error <= m."""
    labels = _as_label_vector(labels)
    base = labels.current
    if mode == "exhaustive":
        if base.shape[0] > _EXHAUSTIVE_LIMIT:
            raise InstanceTooLargeError(
                f"exhaustive mode handles n <= {_EXHAUSTIVE_LIMIT}, got {base.shape[0]}")
        current, _ = _exhaustive_optimum(base, graph, m)
    elif mode == "branch_and_bound":
        current, _ = _branch_and_bound_optimum(base, graph, m, node_cap, solver)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return LabelVector(current=current, original=labels.original)
