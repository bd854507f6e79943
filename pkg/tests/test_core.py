import numpy as np
import pytest
from hypothesis import given, strategies as st

from fairflip.core import (
    Dataset,
    DuplicateEdgeError,
    FractionalSolution,
    IndexOutOfRangeError,
    LabelVector,
    NonFiniteFeatureError,
    NonPositiveWeightError,
    RepairConfig,
    RepairReport,
    SelfLoopError,
    SimilarityGraph,
    UnknownMethodError,
    apply_flips,
    validate_graph,
)


class TestDataset:
    def test_basic_invariants(self):
        ds = Dataset(features=[[1.0, 2.0], [3.0, 4.0]], labels=[0, 1], excluded_cols={1})
        assert ds.n == 2 and ds.d == 2
        assert ds.distance_features().shape == (2, 1)

    def test_rejects_non_binary_labels(self):
        with pytest.raises(ValueError):
            Dataset(features=[[1.0]], labels=[2])

    def test_rejects_nan_features(self):
        with pytest.raises(NonFiniteFeatureError):
            Dataset(features=[[np.nan]], labels=[0])

    def test_rejects_bad_excluded_col(self):
        with pytest.raises(IndexOutOfRangeError):
            Dataset(features=[[1.0]], labels=[0], excluded_cols={3})


class TestValidateGraph:
    def test_triangle_ok(self):
        g = SimilarityGraph.from_edges(4, [(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
        validate_graph(g, 4)

    def test_empty_graph_ok(self):
        validate_graph(SimilarityGraph.from_edges(1, []), 1)

    def test_self_loop(self):
        g = SimilarityGraph.from_edges(2, [(0, 0, 1.0)])
        with pytest.raises(SelfLoopError):
            validate_graph(g, 2)

    def test_duplicate_edge(self):
        g = SimilarityGraph.from_edges(3, [(0, 1, 1.0), (1, 0, 0.5)])
        with pytest.raises(DuplicateEdgeError):
            validate_graph(g, 3)

    def test_non_positive_weight(self):
        g = SimilarityGraph.from_edges(3, [(0, 1, 0.0)])
        with pytest.raises(NonPositiveWeightError):
            validate_graph(g, 3)

    def test_index_out_of_range(self):
        g = SimilarityGraph.from_edges(5, [(2, 4, 1.0)])
        with pytest.raises(IndexOutOfRangeError):
            validate_graph(g, 3)

    def test_edges_canonicalized(self):
        g = SimilarityGraph.from_edges(3, [(2, 0, 1.5), (1, 0, 0.5)])
        assert g.edges == [(0, 1, 0.5), (0, 2, 1.5)]
        assert g.total_weight == pytest.approx(2.0)

    def test_subgraph_reindexes(self):
        g = SimilarityGraph.from_edges(4, [(0, 1, 1.0), (1, 3, 2.0), (2, 3, 3.0)])
        sub = g.subgraph([1, 3])
        assert sub.n == 2
        assert sub.edges == [(0, 1, 2.0)]


class TestApplyFlips:
    def test_single_flip(self):
        lv = LabelVector.fresh([1, 0, 0, 1])
        out = apply_flips(lv, {0})
        assert out.current.tolist() == [0, 0, 0, 1]
        assert out.original.tolist() == [1, 0, 0, 1]

    def test_empty_flip_set(self):
        lv = LabelVector.fresh([1, 0])
        assert apply_flips(lv, set()).current.tolist() == [1, 0]

    def test_set_semantics(self):
        lv = LabelVector.fresh([0])
        assert apply_flips(lv, [0, 0]).current.tolist() == [1]

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRangeError):
            apply_flips(LabelVector.fresh([0, 1]), {5})

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.sets(st.integers(0, 11)))
    def test_involution(self, labels, flips):
        flips = {i for i in flips if i < len(labels)}
        lv = LabelVector.fresh(labels)
        twice = apply_flips(apply_flips(lv, flips), flips)
        assert twice.current.tolist() == lv.current.tolist()

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.sets(st.integers(0, 11)))
    def test_flip_set_size_matches_difference_sum(self, labels, flips):
        flips = {i for i in flips if i < len(labels)}
        out = apply_flips(LabelVector.fresh(labels), flips)
        assert len(out.flip_set) == int(np.abs(out.current - out.original).sum())


class TestFractionalSolution:
    def test_objective_recomputed(self):
        sol = FractionalSolution.from_values([0.5, 0.0, 1.0], [1, 0, 1])
        assert sol.objective == pytest.approx(0.5)

    def test_rejects_out_of_range(self):
        with pytest.raises(Exception):
            FractionalSolution.from_values([1.5], [1])

    def test_distinct_fractional_merges_near_values(self):
        sol = FractionalSolution.from_values([0.5, 0.5 + 1e-9, 0.0, 1.0], [0, 0, 0, 1])
        assert len(sol.distinct_fractional(1e-7)) == 1

    def test_inconsistent_objective_rejected(self):
        with pytest.raises(ValueError):
            FractionalSolution(values=np.array([0.5]), original=np.array([1]), objective=0.9)


class TestConfigs:
    def test_negative_budget(self):
        from fairflip.core import NegativeBudgetError

        with pytest.raises(NegativeBudgetError):
            RepairConfig(m=-1.0)

    def test_unknown_method(self):
        with pytest.raises(UnknownMethodError):
            RepairConfig(method="magic")

    def test_report_feasibility_rule(self):
        r = RepairReport.build("greedy", 2.0, 4.0, 2.0 + 1e-9, 1, runtime_ms=1.0)
        assert r.feasible
        r2 = RepairReport.build("greedy", 2.0, 4.0, 2.5, 1, runtime_ms=1.0)
        assert not r2.feasible
