"""Round a {0, alpha, 1} solution to feasible binary labels and tighten it.

With a single fractional value alpha, the pairwise error is linear in
alpha: f(alpha) = M01 + alpha * M0a + (1 - alpha) * M1a, where the M terms
are the similarity masses of (0-1), (0-alpha) and (1-alpha) edge pairs.
Whichever endpoint of [0, 1] has the lighter alpha-facing mass keeps
f below its fractional value, so rounding that way preserves feasibility.
The rounded solution may overshoot on flips; reverse greedy then restores
original labels while the budget allows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .core import (
    LabelVector,
    PreconditionViolatedError,
    SimilarityGraph,
)
from .metrics import fractional_total_error, total_error
from .transform import DEFAULT_EPS, _fractional_groups


@dataclass(frozen=True)
class RoundingSummary:
    """Masses and counts produced while rounding one fractional value."""

    alpha: Optional[float]
    cross_weight: float        # edge mass between 0- and 1-valued nodes
    zero_side_weight: float    # edge mass between 0-valued and alpha nodes
    one_side_weight: float     # edge mass between 1-valued and alpha nodes
    rounded_to: Optional[int]
    zero_origin_count: int     # alpha nodes whose original label is 0
    one_origin_count: int      # alpha nodes whose original label is 1
    flips_to_one: int          # nodes moved 0 -> 1 by the final labels
    flips_to_zero: int         # nodes moved 1 -> 0 by the final labels
    gap_bound: float


def optimality_gap_bound(summary: RoundingSummary) -> float:
    """Additive flip-count gap of the rounded solution over the exact optimum.

    Rounding alpha up costs (1 - alpha) extra per originally-0 node and saves
    the same per originally-1 node, and symmetrically when rounding down;
    relative to the relaxed optimum that bounds the excess flips.
    """
    if summary.rounded_to is None or summary.alpha is None:
        return 0.0
    if summary.rounded_to == 1:
        return (1.0 - summary.alpha) * (summary.zero_origin_count - summary.one_origin_count)
    return summary.alpha * (summary.one_origin_count - summary.zero_origin_count)


def adaptive_round(solution, original_labels, graph: SimilarityGraph, m: float,
                   eps: float = DEFAULT_EPS) -> Tuple[LabelVector, RoundingSummary]:
    """Round the single fractional value so the error budget still holds."""
    values = solution.values
    original = np.asarray(original_labels, dtype=np.int8).reshape(-1)
    groups = _fractional_groups(values, eps)
    if len(groups) > 1:
        raise PreconditionViolatedError(
            f"{len(groups)} distinct fractional values; expected at most one")
    if fractional_total_error(values, graph) > m + 1e-9:
        raise PreconditionViolatedError("input solution exceeds the error budget")

    # node category: 0, 1, or fractional (2)
    category = np.full(values.shape[0], 2, dtype=np.int8)
    category[values <= eps] = 0
    category[values >= 1 - eps] = 1

    ch, ct = category[graph.head], category[graph.tail]
    pair = ch + ct  # 0-1 edges sum to 1; 0-a to 2 (with a 2 present); 1-a to 3
    w = graph.weights
    cross_weight = float(w[(pair == 1)].sum())
    zero_side = float(w[(pair == 2) & (ch != ct)].sum())
    one_side = float(w[(pair == 3) & ((ch == 2) | (ct == 2))].sum())

    if groups:
        alpha = groups[0][0]
        rounded_to = 1 if zero_side <= one_side else 0
        current = np.where(category == 2, rounded_to, category).astype(np.int8)
    else:
        alpha = None
        rounded_to = None
        current = category.copy()

    is_alpha = category == 2
    summary = RoundingSummary(
        alpha=alpha,
        cross_weight=cross_weight,
        zero_side_weight=zero_side,
        one_side_weight=one_side,
        rounded_to=rounded_to,
        zero_origin_count=int((is_alpha & (original == 0)).sum()),
        one_origin_count=int((is_alpha & (original == 1)).sum()),
        flips_to_one=int(((original == 0) & (current == 1)).sum()),
        flips_to_zero=int(((original == 1) & (current == 0)).sum()),
        gap_bound=0.0,
    )
    summary = replace(summary, gap_bound=optimality_gap_bound(summary))
    return LabelVector(current=current, original=original), summary


def reverse_greedy(labels: LabelVector, graph: SimilarityGraph, m: float,
                   tol: float = 1e-9) -> LabelVector:
    """Undo flips cheapest-first while the total error stays within m.

    Each round tentatively restores the flipped node whose restoration
    raises the error least (ties to the smallest index); if the recomputed
    error exceeds the budget the restoration is reverted and the loop stops,
    so the output is always feasible and its flip set is a subset of the
    input's.
    """
    current = labels.current.astype(np.int8).copy()
    original = labels.original
    error = total_error(current, graph)
    if error > m + tol:
        raise PreconditionViolatedError(f"input error {error} exceeds budget {m}")
    adjacency = graph.adjacency()
    degree = np.asarray(adjacency.sum(axis=1)).reshape(-1)
    while True:
        flipped = np.flatnonzero(current != original)
        if flipped.size == 0:
            break
        neighbor_mass = adjacency @ current.astype(float)
        # error change when node i returns to its original label
        delta = (original[flipped] - current[flipped]) * (degree[flipped] - 2 * neighbor_mass[flipped])
        pick = int(flipped[np.argmin(delta)])
        current[pick] = original[pick]
        new_error = total_error(current, graph)
        if new_error > m + tol:
            current[pick] = 1 - original[pick]
            break
        error = new_error
    return LabelVector(current=current, original=original)
