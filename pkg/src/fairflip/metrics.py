"""Fairness and repair metrics over similarity graphs.

Every metric counts each unordered edge exactly once; the budget m used
elsewhere in the package is expressed in the same unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EmptyGraphError,
    LabelVector,
    LengthMismatchError,
    SimilarityGraph,
    ValueOutOfRangeError,
    _as_binary_vector,
)


@dataclass(frozen=True)
class PredictionVector:
    """Binary model outputs h(x_i) on a held-out set."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_binary_vector(self.values, "predictions"))


def _check_length(values: np.ndarray, graph: SimilarityGraph):
    if values.shape[0] != graph.n:
        raise LengthMismatchError(f"{values.shape[0]} values for a {graph.n}-node graph")


def total_error(labels, graph: SimilarityGraph) -> float:
    """Sum of W_ij over edges whose endpoints carry different labels."""
    labels = _as_binary_vector(labels, "labels")
    _check_length(labels, graph)
    if graph.num_edges == 0:
        return 0.0
    mismatch = labels[graph.head] != labels[graph.tail]
    return float(graph.weights[mismatch].sum())


def fractional_total_error(values, graph: SimilarityGraph) -> float:
    """Sum of W_ij * |v_i - v_j| for relaxed label values in [0, 1]."""
    values = np.asarray(values, dtype=float).reshape(-1)
    _check_length(values, graph)
    if (values < -1e-9).any() or (values > 1 + 1e-9).any():
        raise ValueOutOfRangeError("values must lie in [0, 1]")
    if graph.num_edges == 0:
        return 0.0
    return float((graph.weights * np.abs(values[graph.head] - values[graph.tail])).sum())


def num_flips(labels: LabelVector) -> int:
    return int((labels.current != labels.original).sum())


def consistency_score(preds, test_graph: SimilarityGraph) -> float:
    """1 minus the similarity-weighted fraction of prediction disagreements."""
    if isinstance(preds, PredictionVector):
        preds = preds.values
    preds = _as_binary_vector(preds, "predictions")
    _check_length(preds, test_graph)
    if test_graph.num_edges == 0:
        raise EmptyGraphError("consistency score is undefined on a graph with no edges")
    return 1.0 - total_error(preds, test_graph) / test_graph.total_weight


def data_consistency(labels, graph: SimilarityGraph) -> float:
    """Consistency score applied to training labels instead of predictions."""
    if isinstance(labels, LabelVector):
        labels = labels.current
    labels = _as_binary_vector(labels, "labels")
    _check_length(labels, graph)
    if graph.num_edges == 0:
        raise EmptyGraphError("data consistency is undefined on a graph with no edges")
    return 1.0 - total_error(labels, graph) / graph.total_weight
