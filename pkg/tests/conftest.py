"""Shared fixtures: the worked-example graphs and an independent oracle."""

import itertools

import numpy as np
import pytest

from fairflip.core import SimilarityGraph
from fairflip.metrics import total_error


@pytest.fixture
def triangle_graph():
    """Nodes 0,1,2 mutually similar; node 3 isolated. Labels [1,0,0,1]."""
    return SimilarityGraph.from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


@pytest.fixture
def square_graph():
    """Unit-weight 4-cycle 0-1, 0-2, 1-3, 2-3. Labels [1,0,0,1] give error 4."""
    return SimilarityGraph.from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])


@pytest.fixture
def chain_graph():
    """Path 0-1-2-3; labels [1,1,0,0] have a single middle violation."""
    return SimilarityGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])


def random_instance(rng, n_lo=4, n_hi=14, edge_prob=0.35, min_weight=0.05):
    """Random graph + labels + a budget drawn from [0, initial error]."""
    n = int(rng.integers(n_lo, n_hi + 1))
    edges = [
        (i, j, float(rng.uniform(min_weight, 1.0)))
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    graph = SimilarityGraph.from_edges(n, edges)
    labels = rng.integers(0, 2, size=n).astype(np.int8)
    initial = total_error(labels, graph)
    m = float(rng.uniform(0.0, initial)) if initial > 0 else 0.0
    return graph, labels, m


def brute_force_optimum(labels, graph, m, tol=1e-9):
    """Minimal flips over all binary labelings, by pure-Python enumeration.

    Independent of the package's vectorized exhaustive solver; only usable
    for small n.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    edges = list(zip(graph.head.tolist(), graph.tail.tolist(), graph.weights.tolist()))
    best_flips, best = None, None
    for assignment in itertools.product((0, 1), repeat=n):
        err = sum(w for i, j, w in edges if assignment[i] != assignment[j])
        if err > m + tol:
            continue
        flips = sum(1 for a, b in zip(assignment, labels) if a != b)
        if best_flips is None or flips < best_flips:
            best_flips, best = flips, np.array(assignment, dtype=np.int8)
    return best, best_flips
