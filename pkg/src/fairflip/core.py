"""Shared domain types: datasets, similarity graphs, label vectors, configs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class RepairError(Exception):
    """Base class for all errors raised by this package."""


class SelfLoopError(RepairError):
    pass


class DuplicateEdgeError(RepairError):
    pass


class NonPositiveWeightError(RepairError):
    pass


class IndexOutOfRangeError(RepairError):
    pass


class LengthMismatchError(RepairError):
    pass


class ValueOutOfRangeError(RepairError):
    pass


class EmptyGraphError(RepairError):
    pass


class NonFiniteFeatureError(RepairError):
    pass


class NegativeBudgetError(RepairError):
    pass


class SolverFailureError(RepairError):
    pass


class InfeasibleError(RepairError):
    pass


class PreconditionViolatedError(RepairError):
    pass


class NonConvergenceError(RepairError):
    pass


class InstanceTooLargeError(RepairError):
    pass


class TimeoutError_(RepairError):
    """Branch-and-bound exceeded its node cap."""


class RecallUnreachableError(RepairError):
    pass


class UnknownMethodError(RepairError):
    pass


class ParseError(RepairError):
    def __init__(self, msg, row=None, column=None):
        super().__init__(msg)
        self.row = row
        self.column = column


class NonBinaryLabelError(RepairError):
    pass


class EmptyDatasetError(RepairError):
    pass


class DegenerateDataError(RepairError):
    pass


class KTooLargeWarning(UserWarning):
    """k >= n in a kNN graph request; clamped to n - 1."""


REPAIR_METHODS = ("iflipper", "greedy", "gradient", "kmeans", "ilp")


def _as_binary_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels.

    ``excluded_cols`` marks columns (typically sensitive attributes) that are
    ignored when computing distances between examples; they are still part of
    the feature matrix handed to models.
    """

    features: np.ndarray
    labels: np.ndarray
    excluded_cols: frozenset = frozenset()
    ids: Optional[tuple] = None
    column_names: Optional[tuple] = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {features.shape}")
        if not np.isfinite(features).all():
            raise NonFiniteFeatureError("features contain NaN or infinite values")
        labels = _as_binary_vector(self.labels, "labels")
        if labels.shape[0] != features.shape[0]:
            raise LengthMismatchError(
                f"{labels.shape[0]} labels for {features.shape[0]} rows")
        excluded = frozenset(int(c) for c in self.excluded_cols)
        if any(c < 0 or c >= features.shape[1] for c in excluded):
            raise IndexOutOfRangeError(f"excluded_cols {sorted(excluded)} outside 0..{features.shape[1] - 1}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "excluded_cols", excluded)
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))
        if self.column_names is not None:
            object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def distance_features(self) -> np.ndarray:
        """Columns used for similarity computations (sensitive ones dropped)."""
        keep = [c for c in range(self.d) if c not in self.excluded_cols]
        if not keep:
            raise ValueError("all columns are excluded from distance computation")
        return self.features[:, keep]


@dataclass(frozen=True)
class SimilarityGraph:
    """Sparse undirected weighted graph over example indices.

    Each unordered pair appears at most once and is stored with i < j. The
    edge weight W_ij is the similarity of the two endpoints; a pair with no
    edge is considered dissimilar.
    """

    n: int
    head: np.ndarray
    tail: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        head = np.asarray(self.head, dtype=np.int64).reshape(-1)
        tail = np.asarray(self.tail, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (head.shape == tail.shape == weights.shape):
            raise LengthMismatchError("head, tail and weights must have equal length")
        # canonical orientation and ordering so equal edge sets compare equal
        lo = np.minimum(head, tail)
        hi = np.maximum(head, tail)
        order = np.lexsort((hi, lo))
        object.__setattr__(self, "head", lo[order])
        object.__setattr__(self, "tail", hi[order])
        object.__setattr__(self, "weights", weights[order])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "SimilarityGraph":
        edges = list(edges)
        if edges:
            head, tail, weights = map(np.asarray, zip(*edges))
        else:
            head = tail = np.empty(0, dtype=np.int64)
            weights = np.empty(0, dtype=float)
        return cls(n=int(n), head=head, tail=tail, weights=weights)

    @property
    def edges(self) -> list:
        return list(zip(self.head.tolist(), self.tail.tolist(), self.weights.tolist()))

    @property
    def num_edges(self) -> int:
        return self.head.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def subgraph(self, indices) -> "SimilarityGraph":
        """Induced subgraph on the given rows, reindexed to 0..len-1."""
        indices = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int64)
        if indices.size and (indices[0] < 0 or indices[-1] >= self.n):
            raise IndexOutOfRangeError("subgraph indices outside node range")
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[indices] = np.arange(indices.size)
        keep = (remap[self.head] >= 0) & (remap[self.tail] >= 0)
        return SimilarityGraph(
            n=indices.size,
            head=remap[self.head[keep]],
            tail=remap[self.tail[keep]],
            weights=self.weights[keep],
        )

    def adjacency(self):
        """Symmetric CSR adjacency matrix (cached)."""
        cached = getattr(self, "_adjacency", None)
        if cached is None:
            from scipy.sparse import coo_matrix

            rows = np.concatenate([self.head, self.tail])
            cols = np.concatenate([self.tail, self.head])
            vals = np.concatenate([self.weights, self.weights])
            cached = coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr()
            object.__setattr__(self, "_adjacency", cached)
        return cached


def validate_graph(graph: SimilarityGraph, n: int) -> None:
    """Check all SimilarityGraph invariants against a node count.

    Raises SelfLoopError, DuplicateEdgeError, NonPositiveWeightError or
    IndexOutOfRangeError; returns None when the graph is valid.
    """
    if graph.num_edges == 0:
        if graph.n > n:
            raise IndexOutOfRangeError(f"graph declares {graph.n} nodes but only {n} exist")
        return
    if (graph.head == graph.tail).any():
        i = int(graph.head[(graph.head == graph.tail).argmax()])
        raise SelfLoopError(f"self-loop at node {i}")
    if graph.head.min() < 0 or graph.tail.max() >= n:
        raise IndexOutOfRangeError(f"edge endpoint outside 0..{n - 1}")
    if not np.isfinite(graph.weights).all() or (graph.weights <= 0).any():
        raise NonPositiveWeightError("edge weights must be finite and > 0")
    # edges are canonically sorted, so duplicates are adjacent
    same = (np.diff(graph.head) == 0) & (np.diff(graph.tail) == 0)
    if same.any():
        k = int(same.argmax())
        raise DuplicateEdgeError(f"pair ({graph.head[k]}, {graph.tail[k]}) appears more than once")
    if not np.isfinite(graph.weights.sum()):
        raise NonPositiveWeightError("total weight overflows")


@dataclass(frozen=True)
class LabelVector:
    """Current binary labels paired with the originals they were repaired from."""

    current: np.ndarray
    original: np.ndarray

    def __post_init__(self):
        current = _as_binary_vector(self.current, "current")
        original = _as_binary_vector(self.original, "original")
        if current.shape != original.shape:
            raise LengthMismatchError("current and original labels differ in length")
        object.__setattr__(self, "current", current)
        object.__setattr__(self, "original", original)

    @classmethod
    def fresh(cls, labels) -> "LabelVector":
        labels = _as_binary_vector(labels, "labels")
        return cls(current=labels.copy(), original=labels)

    @property
    def n(self) -> int:
        return self.current.shape[0]

    @property
    def flip_set(self) -> np.ndarray:
        return np.flatnonzero(self.current != self.original)


def apply_flips(labels: LabelVector, flips) -> LabelVector:
    """Toggle ``current`` at the given index set; originals are untouched."""
    flip_idx = sorted({int(i) for i in flips})
    if flip_idx and (flip_idx[0] < 0 or flip_idx[-1] >= labels.n):
        raise IndexOutOfRangeError(f"flip index outside 0..{labels.n - 1}")
    current = labels.current.copy()
    current[flip_idx] = 1 - current[flip_idx]
    return LabelVector(current=current, original=labels.original)


@dataclass(frozen=True)
class FractionalSolution:
    """Per-node values in [0, 1] from the relaxed problem.

    ``objective`` is the relaxed flip count sum(|values - original|); the
    pairwise terms |y_i - y_j| are always derived from ``values``, never
    stored. The original labels ride along so that objectives can be
    recomputed after value transformations.
    """

    values: np.ndarray
    original: np.ndarray
    objective: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValueError("empty solution")
        if (values < -1e-9).any() or (values > 1 + 1e-9).any():
            raise ValueOutOfRangeError("solution values must lie in [0, 1]")
        original = _as_binary_vector(self.original, "original")
        if original.shape[0] != values.shape[0]:
            raise LengthMismatchError("values and original labels differ in length")
        values = np.clip(values, 0.0, 1.0)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "original", original)
        recomputed = float(np.abs(values - original).sum())
        if abs(recomputed - self.objective) > 1e-9:
            raise ValueError(
                f"stored objective {self.objective} != recomputed {recomputed}")

    @classmethod
    def from_values(cls, values, original_labels) -> "FractionalSolution":
        values = np.asarray(values, dtype=float).reshape(-1)
        original = _as_binary_vector(original_labels, "original")
        if values.shape != original.shape:
            raise LengthMismatchError("values and original labels differ in length")
        objective = float(np.abs(np.clip(values, 0.0, 1.0) - original).sum())
        return cls(values=values, original=original, objective=objective)

    def replace_values(self, values) -> "FractionalSolution":
        return FractionalSolution.from_values(values, self.original)

    def distinct_fractional(self, eps: float = 1e-7) -> list:
        """Sorted distinct values in the open interval (0, 1), merged within eps."""
        inner = np.unique(self.values[(self.values > eps) & (self.values < 1 - eps)])
        groups: list[float] = []
        members: list[list[float]] = []
        for v in inner:
            if members and v - members[-1][-1] <= eps:
                members[-1].append(v)
            else:
                members.append([v])
        groups = [float(np.mean(g)) for g in members]
        return groups

    def is_binary(self, eps: float = 1e-7) -> bool:
        return not self.distinct_fractional(eps)


@dataclass(frozen=True)
class RepairConfig:
    """Knobs shared by every repair method."""

    m: float = 0.0
    method: str = "iflipper"
    seed: int = 0
    solver_tolerance: float = 1e-8
    value_merge_epsilon: float = 1e-7

    def __post_init__(self):
        if self.m < 0:
            raise NegativeBudgetError(f"m must be >= 0, got {self.m}")
        if self.method not in REPAIR_METHODS:
            raise UnknownMethodError(f"method must be one of {REPAIR_METHODS}, got {self.method!r}")
        if self.solver_tolerance <= 0 or self.value_merge_epsilon <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class RepairReport:
    """Outcome bookkeeping for a single repair run."""

    method: str
    m: float
    initial_total_error: float
    final_total_error: float
    num_flips: int
    runtime_ms: float
    feasible: bool
    lp_objective: Optional[float] = None
    rounding_flips: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def build(cls, method, m, initial_total_error, final_total_error, num_flips,
              runtime_ms, solver_tolerance=1e-8, lp_objective=None,
              rounding_flips=None, **extra) -> "RepairReport":
        return cls(
            method=method,
            m=float(m),
            initial_total_error=float(initial_total_error),
            final_total_error=float(final_total_error),
            num_flips=int(num_flips),
            runtime_ms=float(runtime_ms),
            feasible=bool(final_total_error <= m + solver_tolerance),
            lp_objective=None if lp_objective is None else float(lp_objective),
            rounding_flips=None if rounding_flips is None else int(rounding_flips),
            extra=dict(extra),
        )

    def as_record(self) -> dict:
        rec = {
            "method": self.method,
            "m": self.m,
            "initial_total_error": self.initial_total_error,
            "final_total_error": self.final_total_error,
            "num_flips": self.num_flips,
            "feasible": self.feasible,
            "lp_objective": self.lp_objective,
            "rounding_flips": self.rounding_flips,
            "runtime_ms": self.runtime_ms,
        }
        rec.update(self.extra)
        return rec
