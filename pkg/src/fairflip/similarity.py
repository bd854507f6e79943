"""Build sparse similarity graphs from feature vectors.

Candidate pairs come either from an exact all-pairs sweep or from
locality-sensitive hashing; edges are then selected by a kNN rule or a
squared-distance threshold and weighted by exp(-theta * d).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    KTooLargeWarning,
    NonFiniteFeatureError,
    RecallUnreachableError,
    SimilarityGraph,
)

_LSH_TABLE_CAP = 512
_VALIDATION_SAMPLE = 500


class CandidatePairs(NamedTuple):
    """Unordered index pairs (head < tail) with squared Euclidean distances."""

    head: np.ndarray
    tail: np.ndarray
    dist2: np.ndarray

    @property
    def size(self) -> int:
        return self.head.shape[0]


@dataclass(frozen=True)
class SimilarityConfig:
    kind: str = "knn"                # "knn" or "threshold"
    k: int = 20
    T: float = 3.0
    theta: float = 0.05
    blocking: str = "exact"          # "exact" or "lsh"
    lsh_tables: int = 8
    lsh_hashes_per_table: int = 12
    target_recall: float = 0.98
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("knn", "threshold"):
            raise ValueError(f"kind must be 'knn' or 'threshold', got {self.kind!r}")
        if self.kind == "knn" and self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.kind == "threshold" and self.T <= 0:
            raise ValueError("T must be a positive squared-distance threshold")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.blocking not in ("exact", "lsh"):
            raise ValueError(f"blocking must be 'exact' or 'lsh', got {self.blocking!r}")
        if self.lsh_tables < 1 or self.lsh_hashes_per_table < 1:
            raise ValueError("LSH parameters must be positive")
        if self.lsh_hashes_per_table > 62:
            raise ValueError("at most 62 hashes per table (bucket keys are packed into int64)")
        if not 0 < self.target_recall <= 1:
            raise ValueError("target_recall must be in (0, 1]")


def _distance_matrix_columns(features, excluded_cols) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise NonFiniteFeatureError("features contain NaN or infinite values")
    excluded = set(int(c) for c in excluded_cols)
    keep = [c for c in range(X.shape[1]) if c not in excluded]
    if not keep:
        raise ValueError("all columns are excluded from distance computation")
    return X[:, keep]


def _pairwise_d2(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # ||x||^2 + ||y||^2 - 2 x.y, clipped against negative rounding noise
    d2 = (
        (X * X).sum(axis=1)[:, None]
        + (Y * Y).sum(axis=1)[None, :]
        - 2.0 * (X @ Y.T)
    )
    return np.maximum(d2, 0.0)


def exact_candidate_pairs(features, excluded_cols=()) -> CandidatePairs:
    """All n(n-1)/2 unordered pairs with squared Euclidean distances.

    The O(n^2) fallback; use lsh_candidate_pairs for large inputs.
    """
    X = _distance_matrix_columns(features, excluded_cols)
    n = X.shape[0]
    if n < 2:
        return CandidatePairs(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    head, tail = np.triu_indices(n, k=1)
    d2 = _pairwise_d2(X, X)[head, tail]
    return CandidatePairs(head.astype(np.int64), tail.astype(np.int64), d2)


def _hash_tables(rng: np.random.Generator, d: int, num_tables: int, num_hashes: int):
    """Random affine hyperplanes; one (directions, offsets) pair per table."""
    tables = []
    for _ in range(num_tables):
        G = rng.standard_normal((num_hashes, d))
        G /= np.linalg.norm(G, axis=1, keepdims=True)
        offsets = rng.standard_normal(num_hashes)
        tables.append((G, offsets))
    return tables


def _bucket_keys(Xs: np.ndarray, table) -> np.ndarray:
    G, offsets = table
    bits = (Xs @ G.T - offsets[None, :]) > 0
    powers = 1 << np.arange(bits.shape[1], dtype=np.int64)
    return bits.astype(np.int64) @ powers


def _pairs_from_buckets(keys: np.ndarray) -> np.ndarray:
    """Encoded i*n+j pair codes for all points sharing a bucket."""
    n = keys.shape[0]
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    starts = np.flatnonzero(np.r_[True, np.diff(sorted_keys) != 0])
    ends = np.r_[starts[1:], n]
    codes = []
    for s, e in zip(starts, ends):
        if e - s < 2:
            continue
        members = np.sort(order[s:e])
        a, b = np.triu_indices(members.shape[0], k=1)
        codes.append(members[a] * n + members[b])
    if not codes:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(codes)


def _qualifying_sample_pairs(X: np.ndarray, sample: np.ndarray, config: SimilarityConfig) -> set:
    """Ground-truth similar pairs within a validation sample, per config.kind."""
    Xs = X[sample]
    pairs = exact_candidate_pairs(Xs)
    if pairs.size == 0:
        return set()
    if config.kind == "threshold":
        mask = pairs.dist2 <= config.T
        return {(int(sample[i]), int(sample[j]))
                for i, j in zip(pairs.head[mask], pairs.tail[mask])}
    graph = build_knn_graph(Xs, replace(config, theta=0.0), pairs)
    return {(int(sample[i]), int(sample[j])) for i, j, _ in graph.edges}


def lsh_candidate_pairs(features, config: SimilarityConfig, excluded_cols=()) -> CandidatePairs:
    """Candidate pairs from hyperplane LSH, auto-tuned to the recall target.

    Tables are doubled until, on a held-out validation sample, at least
    ``config.target_recall`` of the truly similar pairs co-occur in some
    bucket. Raises RecallUnreachableError if the table cap is hit first.
    """
    X = _distance_matrix_columns(features, excluded_cols)
    n = X.shape[0]
    if n < 2:
        return CandidatePairs(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Xs = (X - mu) / sd

    rng = np.random.default_rng(config.seed)
    sample = np.sort(rng.choice(n, size=min(n, _VALIDATION_SAMPLE), replace=False))
    truth = _qualifying_sample_pairs(X, sample, config)

    num_tables = config.lsh_tables
    tables = _hash_tables(rng, Xs.shape[1], num_tables, config.lsh_hashes_per_table)
    keys = [_bucket_keys(Xs, t) for t in tables]
    while True:
        if truth:
            sample_set = set(sample.tolist())
            hit = set()
            for k in keys:
                sub = k[sample]
                for code in _pairs_from_buckets(sub):
                    i, j = divmod(int(code), sample.shape[0])
                    hit.add((int(sample[i]), int(sample[j])))
            recall = len(hit & truth) / len(truth)
        else:
            recall = 1.0
        if recall >= config.target_recall:
            break
        if num_tables >= _LSH_TABLE_CAP:
            raise RecallUnreachableError(
                f"recall {recall:.3f} < {config.target_recall} with {num_tables} tables")
        extra = _hash_tables(rng, Xs.shape[1], num_tables, config.lsh_hashes_per_table)
        tables.extend(extra)
        keys.extend(_bucket_keys(Xs, t) for t in extra)
        num_tables *= 2

    codes = np.unique(np.concatenate([_pairs_from_buckets(k) for k in keys]))
    if codes.size == 0:
        return CandidatePairs(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    head, tail = np.divmod(codes, n)
    d2 = ((X[head] - X[tail]) ** 2).sum(axis=1)
    return CandidatePairs(head, tail, d2)


def _knn_edge_mask(pairs: CandidatePairs, n: int, k: int) -> np.ndarray:
    """Mask of candidate pairs where one endpoint ranks in the other's top k.

    Ranks are computed over the candidate list only; ties at the k-th
    distance are broken by smaller partner index.
    """
    # view each undirected pair from both endpoints
    owner = np.concatenate([pairs.head, pairs.tail])
    partner = np.concatenate([pairs.tail, pairs.head])
    d2 = np.concatenate([pairs.dist2, pairs.dist2])
    pair_id = np.tile(np.arange(pairs.size, dtype=np.int64), 2)

    order = np.lexsort((partner, d2, owner))
    owner_sorted = owner[order]
    # rank within each owner's sorted neighbor list
    first = np.r_[True, owner_sorted[1:] != owner_sorted[:-1]]
    group_start = np.maximum.accumulate(np.where(first, np.arange(owner_sorted.size), 0))
    rank = np.arange(owner_sorted.size) - group_start

    mask = np.zeros(pairs.size, dtype=bool)
    selected = pair_id[order[rank < k]]
    mask[selected] = True
    return mask


def build_knn_graph(features, config: SimilarityConfig,
                    candidates: Optional[CandidatePairs] = None) -> SimilarityGraph:
    """Graph with an edge (i, j) iff i is in NN_k(j) or j is in NN_k(i)."""
    if config.kind != "knn":
        raise ValueError("config.kind must be 'knn'")
    X = _distance_matrix_columns(features, ())
    n = X.shape[0]
    if n < 2:
        return SimilarityGraph.from_edges(n, [])
    k = config.k
    if k >= n:
        warnings.warn(f"k={k} >= n={n}; clamping to {n - 1}", KTooLargeWarning)
        k = n - 1
    if candidates is None:
        candidates = exact_candidate_pairs(X)
    mask = _knn_edge_mask(candidates, n, k)
    w = np.exp(-config.theta * candidates.dist2[mask])
    return SimilarityGraph(n=n, head=candidates.head[mask],
                           tail=candidates.tail[mask], weights=w)


def build_threshold_graph(features, config: SimilarityConfig,
                          candidates: Optional[CandidatePairs] = None) -> SimilarityGraph:
    """Graph with an edge (i, j) iff d(x_i, x_j) <= T."""
    if config.kind != "threshold":
        raise ValueError("config.kind must be 'threshold'")
    X = _distance_matrix_columns(features, ())
    n = X.shape[0]
    if n < 2:
        return SimilarityGraph.from_edges(n, [])
    if candidates is None:
        candidates = exact_candidate_pairs(X)
    mask = candidates.dist2 <= config.T
    w = np.exp(-config.theta * candidates.dist2[mask])
    return SimilarityGraph(n=n, head=candidates.head[mask],
                           tail=candidates.tail[mask], weights=w)


def build_graph(dataset_or_features, config: SimilarityConfig, excluded_cols=None) -> SimilarityGraph:
    """Convenience wrapper: candidate generation plus the configured builder."""
    from .core import Dataset

    if isinstance(dataset_or_features, Dataset):
        X = dataset_or_features.distance_features()
    else:
        X = _distance_matrix_columns(dataset_or_features, excluded_cols or ())
    if config.blocking == "lsh":
        candidates = lsh_candidate_pairs(X, config)
    else:
        candidates = None
    if config.kind == "knn":
        return build_knn_graph(X, config, candidates)
    return build_threshold_graph(X, config, candidates)
