import numpy as np
import pytest

from fairflip.core import EmptyGraphError, LabelVector, LengthMismatchError, SimilarityGraph
from fairflip.metrics import (
    consistency_score,
    data_consistency,
    fractional_total_error,
    num_flips,
    total_error,
)


class TestTotalError:
    def test_triangle_two_violations(self, triangle_graph):
        assert total_error([1, 0, 0, 1], triangle_graph) == pytest.approx(2.0)

    def test_all_equal_labels(self, triangle_graph):
        assert total_error([1, 1, 1, 1], triangle_graph) == 0.0

    def test_square_four_violations(self, square_graph):
        assert total_error([1, 0, 0, 1], square_graph) == pytest.approx(4.0)

    def test_length_mismatch(self, triangle_graph):
        with pytest.raises(LengthMismatchError):
            total_error([1, 0], triangle_graph)

    def test_complement_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            edges = [(i, j, float(rng.uniform(0.1, 1)))
                     for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
            g = SimilarityGraph.from_edges(n, edges)
            labels = rng.integers(0, 2, size=n)
            assert total_error(labels, g) == pytest.approx(total_error(1 - labels, g))


class TestFractionalTotalError:
    def test_half_values_on_square(self, square_graph):
        assert fractional_total_error([0.5, 0, 0, 0.5], square_graph) == pytest.approx(2.0)

    def test_binary_reduces_to_total_error(self, square_graph):
        labels = np.array([1, 0, 0, 1])
        assert fractional_total_error(labels.astype(float), square_graph) == pytest.approx(
            total_error(labels, square_graph))

    def test_asymmetric_values(self, square_graph):
        assert fractional_total_error([0.1, 0, 0, 0.9], square_graph) == pytest.approx(2.0)

    def test_convex_along_segments(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n = int(rng.integers(2, 10))
            edges = [(i, j, float(rng.uniform(0.1, 1)))
                     for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
            g = SimilarityGraph.from_edges(n, edges)
            u, v = rng.random(n), rng.random(n)
            t = float(rng.random())
            mid = fractional_total_error(t * u + (1 - t) * v, g)
            bound = t * fractional_total_error(u, g) + (1 - t) * fractional_total_error(v, g)
            assert mid <= bound + 1e-12


class TestNumFlips:
    def test_one_flip(self):
        lv = LabelVector(current=np.array([0, 0, 0, 1]), original=np.array([1, 0, 0, 1]))
        assert num_flips(lv) == 1

    def test_zero_flips(self):
        assert num_flips(LabelVector.fresh([1, 0, 1])) == 0

    def test_two_flips(self):
        lv = LabelVector(current=np.array([0, 0, 0, 0]), original=np.array([1, 0, 0, 1]))
        assert num_flips(lv) == 2


class TestConsistency:
    def test_identical_predictions(self, triangle_graph):
        assert consistency_score([1, 1, 1, 1], triangle_graph) == pytest.approx(1.0)

    def test_triangle_example(self, triangle_graph):
        assert consistency_score([1, 0, 0, 1], triangle_graph) == pytest.approx(1 - 2 / 3)

    def test_alternating_bipartite_zero(self):
        g = SimilarityGraph.from_edges(4, [(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)])
        assert consistency_score([1, 1, 0, 0], g) == pytest.approx(0.0)

    def test_empty_graph_rejected(self):
        with pytest.raises(EmptyGraphError):
            consistency_score([1, 0], SimilarityGraph.from_edges(2, []))

    def test_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            n = int(rng.integers(2, 10))
            edges = [(i, j, float(rng.uniform(0.1, 1)))
                     for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6]
            if not edges:
                continue
            g = SimilarityGraph.from_edges(n, edges)
            score = consistency_score(rng.integers(0, 2, size=n), g)
            assert 0.0 <= score <= 1.0


class TestDataConsistency:
    def test_zero_error_is_one(self, triangle_graph):
        assert data_consistency([0, 0, 0, 1], triangle_graph) == pytest.approx(1.0)

    def test_triangle_initial(self, triangle_graph):
        assert data_consistency([1, 0, 0, 1], triangle_graph) == pytest.approx(1 - 2 / 3)

    def test_square_initial_is_zero(self, square_graph):
        assert data_consistency([1, 0, 0, 1], square_graph) == pytest.approx(0.0)
