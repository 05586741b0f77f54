import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbcmo.cluster import NOISE, ClusterLabeling
from dbcmo.evaluation import (
    METRICS_HEADER,
    Metrics,
    PairCounts,
    evaluate,
    metrics_row,
    pair_counts,
    pair_counts_direct,
    precision_recall_f1,
    write_metrics,
)


class TestPairCounts:
    def test_hand_example(self):
        truth = {"a": "x", "b": "x", "c": "y", "d": "y"}
        pred = {"a": 0, "b": 0, "c": 0, "d": 1}
        expected = PairCounts(tp=1, tn=2, fp=2, fn=1)
        assert pair_counts_direct(pred, truth) == expected
        assert pair_counts(pred, truth) == expected

    def test_perfect(self):
        truth = {"a": "x", "b": "x", "c": "y"}
        c = pair_counts({"a": 5, "b": 5, "c": 2}, truth)
        assert c.fp == 0 and c.fn == 0 and c.tp == 1

    def test_all_singletons(self):
        truth = {"a": "x", "b": "x", "c": "y"}
        c = pair_counts({"a": 0, "b": 1, "c": 2}, truth)
        assert c.tp == 0 and c.fp == 0

    def test_predicted_noise_is_singleton(self):
        truth = {"a": "x", "b": "x"}
        assert pair_counts({"a": NOISE, "b": NOISE}, truth) == PairCounts(0, 0, 0, 1)

    def test_truth_noise_excluded(self):
        truth = {"a": "x", "b": "x", "n": "-1"}
        assert pair_counts({"a": 0, "b": 0, "n": 0}, truth) == PairCounts(1, 0, 0, 0)

    def test_id_mismatch(self):
        with pytest.raises(ValueError):
            pair_counts({"a": 0}, {"b": "x"})

    def test_accepts_labeling(self):
        lab = ClusterLabeling({"a": 0, "b": 0}, {"a": True, "b": True})
        assert pair_counts(lab, {"a": "x", "b": "x"}).tp == 1

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(0, 40))
    def test_contingency_matches_enumeration(self, seed, n):
        rng = np.random.default_rng(seed)
        ids = [f"o{i}" for i in range(n)]
        truth = {i: str(rng.integers(-1, 4)) for i in ids}
        pred = {i: int(rng.integers(-1, 5)) for i in ids}
        c = pair_counts(pred, truth)
        assert c == pair_counts_direct(pred, truth)
        m = sum(1 for v in truth.values() if v != "-1")
        assert c.total == m * (m - 1) // 2


class TestMetrics:
    def test_hand_example(self):
        m = precision_recall_f1(PairCounts(tp=1, tn=2, fp=2, fn=1))
        assert m.precision == pytest.approx(1 / 3)
        assert m.recall == pytest.approx(1 / 2)
        assert m.f1 == pytest.approx(0.4)

    def test_perfect(self):
        assert precision_recall_f1(PairCounts(5, 3, 0, 0)) == Metrics(1.0, 1.0, 1.0)

    def test_vacuous(self):
        assert precision_recall_f1(PairCounts(0, 0, 0, 0)) == Metrics(1.0, 1.0, 1.0)

    def test_zero_f1(self):
        assert precision_recall_f1(PairCounts(0, 0, 3, 2)).f1 == 0.0

    def test_evaluate(self):
        m = evaluate({"a": 0, "b": 0, "c": 0, "d": 1}, {"a": "x", "b": "x", "c": "y", "d": "y"})
        assert m.f1 == pytest.approx(0.4)

    def test_write(self, tmp_path):
        row = metrics_row("dbcmo", "jain", Metrics(1.0, 0.5, 2 / 3), 12.5)
        write_metrics(tmp_path / "m.csv", [row])
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines == [METRICS_HEADER, "dbcmo,jain,1.000000,0.500000,0.666667,12.500"]
