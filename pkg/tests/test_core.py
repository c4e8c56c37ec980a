import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from utilcp import LabelSpace, ScoreMatrix, SplitSpec, sort_descending, split
from utilcp.core import as_prob_matrix, as_prob_vector
from utilcp.errors import DataError, EmptyFold, UnknownLabel


def _matrix(n, K=3, seed=0):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(K), size=n)
    return ScoreMatrix.from_arrays(P, rng.integers(0, K, size=n))


class TestLabelSpace:
    def test_check(self):
        space = LabelSpace(3)
        assert space.check(2) == 2
        with pytest.raises(UnknownLabel):
            space.check(3)
        with pytest.raises(UnknownLabel):
            space.check(-1)

    def test_needs_two_labels(self):
        with pytest.raises(DataError):
            LabelSpace(1)

    def test_names(self):
        assert LabelSpace(2, ["a", "b"]).names == ("a", "b")
        with pytest.raises(DataError):
            LabelSpace(2, ["a", "a"])
        with pytest.raises(DataError):
            LabelSpace(3, ["a", "b"])


class TestProbabilityRows:
    def test_small_drift_is_renormalized(self):
        p = as_prob_vector([0.5, 0.3, 0.1995])
        assert np.isclose(p.sum(), 1.0, atol=1e-15)
        assert p[0] > 0.5

    def test_moderate_drift_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            p = as_prob_vector([0.5, 0.3, 0.195])
        assert "renormalizing" in caplog.text
        assert np.isclose(p.sum(), 1.0)

    def test_large_drift_is_rejected_with_row(self):
        with pytest.raises(DataError, match="row 1"):
            as_prob_matrix([[0.5, 0.5], [0.2, 0.3]])

    def test_out_of_range_entries(self):
        with pytest.raises(DataError):
            as_prob_vector([1.2, -0.2])
        with pytest.raises(DataError):
            as_prob_vector([np.nan, 1.0])

    def test_result_is_read_only(self):
        P = as_prob_matrix([[0.5, 0.5]])
        with pytest.raises(ValueError):
            P[0, 0] = 1.0

    @given(hnp.arrays(float, (4, 5), elements=st.floats(0.01, 1.0)))
    def test_renormalization_is_idempotent(self, raw):
        P = raw / raw.sum(axis=1, keepdims=True)
        once = as_prob_matrix(P)
        twice = as_prob_matrix(once)
        assert np.array_equal(once, twice)


class TestScoreMatrix:
    def test_basic(self):
        m = ScoreMatrix.from_arrays([[0.5, 0.5], [0.9, 0.1]], [0, 1], ids=["a", "b"])
        assert len(m) == 2 and m.K == 2
        assert np.allclose(m.true_label_probs(), [0.5, 0.1])

    def test_duplicate_ids(self):
        with pytest.raises(DataError):
            ScoreMatrix.from_arrays([[0.5, 0.5], [0.9, 0.1]], [0, 1], ids=["a", "a"])

    def test_label_out_of_range(self):
        with pytest.raises(UnknownLabel):
            ScoreMatrix.from_arrays([[0.5, 0.5]], [2])

    def test_take(self):
        m = _matrix(10)
        sub = m.take([3, 1])
        assert list(sub.ids) == ["3", "1"]
        assert np.array_equal(sub.probs, m.probs[[3, 1]])


class TestSplit:
    def test_sizes_floor_with_remainder_to_calibration(self):
        folds = split(_matrix(10), SplitSpec((0.5, 0.25, 0.25), seed=7))
        assert tuple(len(f) for f in folds) == (5, 2, 3)

    def test_small(self):
        folds = split(_matrix(4), SplitSpec((0.5, 0.25, 0.25)))
        assert tuple(len(f) for f in folds) == (2, 1, 1)

    def test_default_gives_half_to_calibration(self):
        folds = split(_matrix(100), SplitSpec())
        assert tuple(len(f) for f in folds) == (25, 25, 50)

    def test_deterministic(self):
        m = _matrix(50)
        a = split(m, SplitSpec(seed=3))
        b = split(m, SplitSpec(seed=3))
        for x, y in zip(a, b):
            assert list(x.ids) == list(y.ids)

    @given(st.integers(3, 200), st.integers(0, 2**31 - 1))
    def test_partition(self, n, seed):
        m = _matrix(n, seed=1)
        folds = split(m, SplitSpec((0.25, 0.25, 0.5), seed), required=(False, False, True))
        ids = [i for f in folds for i in f.ids]
        assert sorted(ids) == sorted(m.ids)
        assert len(set(ids)) == n

    def test_empty_fold(self):
        with pytest.raises(EmptyFold):
            split(_matrix(5), SplitSpec((0.1, 0.1, 0.8)))

    def test_bad_fractions(self):
        with pytest.raises(DataError):
            SplitSpec((0.5, 0.5, 0.5))


class TestSortDescending:
    @pytest.mark.parametrize(
        "p, expected",
        [([0.5, 0.3, 0.2], [0, 1, 2]), ([0.2, 0.3, 0.5], [2, 1, 0]), ([0.4, 0.4, 0.2], [0, 1, 2])],
    )
    def test_examples(self, p, expected):
        assert list(sort_descending(p)) == expected

    @given(hnp.arrays(float, 8, elements=st.sampled_from([0.0, 0.1, 0.25, 0.5])))
    def test_is_sorted_with_ties_by_id(self, p):
        order = sort_descending(p)
        keys = [(-p[y], y) for y in order]
        assert keys == sorted(keys)
