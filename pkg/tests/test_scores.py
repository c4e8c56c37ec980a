import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from utilcp import CostModel, Hierarchy, ScoreMethod, aps_rho, greedy_order_score, label_scores, penalized_score, ratio_score
from utilcp.errors import UnknownLabel
from utilcp.scores import instance_scores, insertion_orders

P3 = [0.5, 0.3, 0.2]

prob_vectors = hnp.arrays(float, st.integers(2, 8), elements=st.floats(0.001, 1.0)).map(lambda a: a / a.sum())


class TestBaseScore:
    @pytest.mark.parametrize("y, expected", [(0, 0.5), (1, 0.8), (2, 1.0)])
    def test_examples(self, y, expected):
        assert aps_rho(P3, y) == pytest.approx(expected, abs=1e-15)

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            aps_rho(P3, 3)

    @given(prob_vectors)
    def test_batch_agrees(self, p):
        batch = label_scores(ScoreMethod.base(), p[None, :])[0]
        for y in range(len(p)):
            assert batch[y] == pytest.approx(aps_rho(p, y), abs=1e-12)


class TestPenalizedScore:
    def test_separable_example(self):
        m = ScoreMethod.penalized(CostModel.separable([0.25, 0.5, 0.25]), 1.0)
        assert penalized_score(m, P3, 1) == pytest.approx(0.8 + 0.75)

    def test_coverage_example(self):
        cost = CostModel.coverage(categories=[{0, 1}, {2}], K=3)
        m = ScoreMethod.penalized(cost, 2.0)
        # prefix costs 1, 1, 2 along (0, 1, 2); the last label's cumulative loss is 2
        assert penalized_score(m, P3, 2) == pytest.approx(1.0 + 2 * 2)
        assert penalized_score(m, P3, 1) == pytest.approx(0.8 + 2 * 1)

    @given(prob_vectors)
    def test_lambda_zero_is_base(self, p):
        m = ScoreMethod.penalized(CostModel.separable(np.linspace(0.1, 1.0, len(p))), 0.0)
        for y in range(len(p)):
            assert penalized_score(m, p, y) == aps_rho(p, y)
        assert np.array_equal(label_scores(m, p[None, :]), label_scores(ScoreMethod.base(), p[None, :]))

    @pytest.mark.parametrize(
        "cost",
        [
            CostModel.separable(np.linspace(0.25, 2.0, 8)),
            CostModel.max_distance(Hierarchy.balanced((2, 4))),
            CostModel.coverage(Hierarchy.balanced((2, 4))),
        ],
        ids=lambda c: c.kind,
    )
    def test_batch_agrees(self, cost):
        rng = np.random.default_rng(3)
        m = ScoreMethod.penalized(cost, 0.7)
        P = rng.dirichlet(np.ones(8), size=30)
        S = label_scores(m, P)
        for i in range(len(P)):
            for y in range(8):
                assert S[i, y] == pytest.approx(penalized_score(m, P[i], y), abs=1e-12)

    def test_name(self):
        assert ScoreMethod.penalized(CostModel.separable([1.0, 1.0]), 0.5).name == "penalized(lambda=0.5)"


class TestRatioScore:
    def test_example(self):
        m = ScoreMethod.ratio(CostModel.separable([0.5, 1.0]))
        assert ratio_score(m, [0.4, 0.6], 0) == pytest.approx(0.8)

    def test_cheap_label_outranks(self):
        m = ScoreMethod.ratio(CostModel.separable([1.0, 0.25]))
        assert ratio_score(m, [0.6, 0.4], 0) == pytest.approx(0.6)
        assert ratio_score(m, [0.6, 0.4], 1) == pytest.approx(1.6)
        assert list(insertion_orders(m, [[0.6, 0.4]])[0]) == [1, 0]

    @given(prob_vectors)
    def test_unit_costs_rank_by_probability(self, p):
        m = ScoreMethod.ratio(CostModel.separable(np.ones(len(p))))
        r = np.array([ratio_score(m, p, y) for y in range(len(p))])
        assert np.array_equal(np.argsort(-r, kind="stable"), np.argsort(-p, kind="stable"))

    @given(prob_vectors, st.floats(0.1, 10.0))
    def test_ranking_invariant_to_cost_scale(self, p, c):
        pen = np.linspace(0.3, 1.0, len(p))
        a = insertion_orders(ScoreMethod.ratio(CostModel.separable(pen)), p[None, :])
        b = insertion_orders(ScoreMethod.ratio(CostModel.separable(c * pen)), p[None, :])
        assert np.array_equal(a, b)

    def test_batch_is_negated(self):
        m = ScoreMethod.ratio(CostModel.separable([0.5, 1.0]))
        assert m.negated
        assert np.allclose(label_scores(m, [[0.4, 0.6]]), [[-0.8, -0.6]])


class TestGreedyOrderScore:
    @given(prob_vectors)
    def test_uniform_separable_reduces_to_base(self, p):
        m = ScoreMethod.greedy(CostModel.separable(np.ones(len(p))))
        for y in range(len(p)):
            assert greedy_order_score(m, p, y) == pytest.approx(aps_rho(p, y), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_first_and_last(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(8))
        m = ScoreMethod.greedy(CostModel.coverage(Hierarchy.balanced((2, 4))))
        inst = instance_scores(m, p)
        first, last = inst.insertion_order[0], inst.insertion_order[-1]
        assert greedy_order_score(m, p, first) == pytest.approx(p[first])
        assert greedy_order_score(m, p, last) == pytest.approx(1.0)

    def test_coverage_example(self):
        m = ScoreMethod.greedy(CostModel.coverage(categories=[{0, 1}, {2}], K=3))
        scores = [greedy_order_score(m, [0.4, 0.35, 0.25], y) for y in range(3)]
        assert scores == pytest.approx([0.4, 0.75, 1.0])
