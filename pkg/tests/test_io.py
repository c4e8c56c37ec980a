import numpy as np
import pytest

from utilcp import CostModel, Hierarchy, ScoreMatrix, set_loss
from utilcp.config import load_config
from utilcp.errors import (
    CycleDetected,
    DataError,
    DimensionMismatch,
    LabelOutOfRange,
    NonPositiveCost,
    OrphanLabel,
    ParseError,
    UnknownLabel,
)
from utilcp.io import (
    atomic_write,
    format_categories,
    format_costs,
    format_hierarchy,
    format_scores,
    load_categories,
    load_costs,
    load_hierarchy,
    load_scores,
)


def write(tmp_path, name, text, newline="\n"):
    path = tmp_path / name
    path.write_bytes(text.replace("\n", newline).encode("utf-8"))
    return path


class TestScores:
    def test_well_formed(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1,p_2\na,0,0.5,0.3,0.2\nb,2,0.1,0.1,0.8\n")
        m = load_scores(p)
        assert len(m) == 2 and m.K == 3
        assert list(m.ids) == ["a", "b"] and list(m.labels) == [0, 2]

    def test_crlf(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,1,0.5,0.5\n", newline="\r\n")
        assert len(load_scores(p)) == 1

    def test_small_drift_renormalized(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,0,0.4995,0.5\n")
        m = load_scores(p)
        assert m.probs[0].sum() == pytest.approx(1.0, abs=1e-15)

    def test_bad_sum_names_row(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,0,0.5,0.5\nb,0,0.25,0.25\n")
        with pytest.raises(ParseError, match="row 3"):
            load_scores(p)

    def test_dimension_mismatch(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,0,0.5,0.3,0.2\n")
        with pytest.raises(DimensionMismatch):
            load_scores(p)

    def test_label_out_of_range(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,2,0.5,0.5\n")
        with pytest.raises(LabelOutOfRange, match="column 'label'"):
            load_scores(p)

    def test_bad_number(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,0,half,0.5\n")
        with pytest.raises(ParseError, match="p_0"):
            load_scores(p)

    def test_bad_header(self, tmp_path):
        with pytest.raises(ParseError):
            load_scores(write(tmp_path, "s.csv", "x,label,p_0,p_1\n"))

    def test_duplicate_id(self, tmp_path):
        p = write(tmp_path, "s.csv", "id,label,p_0,p_1\na,0,0.5,0.5\na,1,0.5,0.5\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_scores(p)

    def test_round_trip_is_bit_exact(self, tmp_path, small_matrix):
        path = tmp_path / "s.csv"
        atomic_write(path, format_scores(small_matrix))
        back = load_scores(path)
        assert np.array_equal(back.probs, small_matrix.probs)
        assert np.array_equal(back.labels, small_matrix.labels)


class TestHierarchy:
    def test_balanced_file(self, tmp_path):
        text = "child,parent\na,root\nb,root\na0,a\na1,a\nb0,b\nb1,b\n\nlabel_id,leaf_name\n0,a0\n1,a1\n2,b0\n3,b1\n"
        h = load_hierarchy(write(tmp_path, "h.csv", text))
        assert h.K == 4
        assert h.categories() == [frozenset({0, 1}), frozenset({2, 3})]

    def test_round_trip(self, tmp_path):
        h = Hierarchy.balanced((3, 2))
        back = load_hierarchy(write(tmp_path, "h.csv", format_hierarchy(h)))
        assert np.array_equal(back.distances, h.distances)

    def test_cycle(self, tmp_path):
        with pytest.raises(CycleDetected):
            load_hierarchy(write(tmp_path, "h.csv", "a,b\nb,a\nc,a\n\n0,c\n"))

    def test_orphan_label(self, tmp_path):
        with pytest.raises(OrphanLabel):
            load_hierarchy(write(tmp_path, "h.csv", "a,r\nb,r\n\n0,a\n1,zz\n"))

    def test_missing_separator(self, tmp_path):
        with pytest.raises(ParseError):
            load_hierarchy(write(tmp_path, "h.csv", "a,r\nb,r\n"))


class TestCosts:
    def test_load(self, tmp_path):
        costs = load_costs(write(tmp_path, "c.csv", "label_id,cost\n1,0.5\n0,0.25\n"))
        assert list(costs) == [0.25, 0.5]

    def test_missing_label_is_listed(self, tmp_path):
        with pytest.raises(DataError, match=r"\[1\]"):
            load_costs(write(tmp_path, "c.csv", "0,1.0\n2,1.0\n"))

    def test_nonpositive(self, tmp_path):
        with pytest.raises(NonPositiveCost):
            load_costs(write(tmp_path, "c.csv", "0,1.0\n1,0\n"))

    def test_unknown_label(self, tmp_path):
        with pytest.raises(UnknownLabel):
            load_costs(write(tmp_path, "c.csv", "0,1.0\n1,1.0\n5,1.0\n"), K=2)

    def test_round_trip(self, tmp_path):
        pen = np.array([0.1, 0.7, 1 / 3])
        assert np.array_equal(load_costs(write(tmp_path, "c.csv", format_costs(pen))), pen)


class TestCategories:
    def test_overlap(self, tmp_path):
        cats = load_categories(write(tmp_path, "k.csv", "category_name,label_id\nx,0\nx,1\ny,1\ny,2\n"), K=3)
        assert cats == [frozenset({0, 1}), frozenset({1, 2})]
        m = CostModel.coverage(categories=cats, K=3)
        assert set_loss(m, {1}) == 2

    def test_unknown_label(self, tmp_path):
        with pytest.raises(UnknownLabel):
            load_categories(write(tmp_path, "k.csv", "x,0\nx,7\n"), K=3)

    def test_round_trip(self, tmp_path):
        cats = [frozenset({0, 2}), frozenset({1})]
        assert load_categories(write(tmp_path, "k.csv", format_categories(cats))) == cats


class TestAtomicWrite:
    def test_no_partial_file_on_failure(self, tmp_path):
        target = tmp_path / "out.txt"
        with pytest.raises(TypeError):
            atomic_write(target, 123)
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []

    def test_replaces(self, tmp_path):
        target = tmp_path / "out.txt"
        atomic_write(target, "a")
        atomic_write(target, "b")
        assert target.read_text() == "b"


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None)
        assert cfg.alpha == 0.1
        assert cfg.grid == (0.001, 0.01, 0.1, 1.0, 10.0)
        assert cfg.fractions == (0.25, 0.25, 0.5)
        assert cfg.runs == 10

    def test_file(self, tmp_path):
        write(tmp_path, "c.csv", "0,1.0\n1,0.5\n")
        cfg_path = write(
            tmp_path,
            "run.ini",
            "[run]\nalpha = 0.05\nmethod = ratio\ngrid = 0, 1\nruns = 3\n\n[cost]\ncosts = c.csv\n\n[task]\nK = 8\ntemperature = 1\n",
        )
        cfg = load_config(cfg_path).validate()
        assert cfg.alpha == 0.05 and cfg.method == "ratio" and cfg.grid == (0.0, 1.0) and cfg.runs == 3
        assert cfg.task.K == 8 and cfg.task.temperature == 1.0
        assert list(cfg.cost_model(2).penalties) == [1.0, 0.5]

    def test_invalid_values(self, tmp_path):
        with pytest.raises(DataError):
            load_config(write(tmp_path, "a.ini", "[run]\nalpha = x\n"))
        with pytest.raises(DataError):
            load_config(write(tmp_path, "b.ini", "[run]\nalpha = 1.5\n")).validate()
        with pytest.raises(DataError):
            load_config(write(tmp_path, "c.ini", "[run]\ngrid = -1\n")).validate()
