"""Tests for evaluation metrics."""

import numpy as np
import pytest

from gendisc.core.metrics import accuracy, check_alignment, compute_metrics
from gendisc.exceptions import AlignmentMismatchError


class TestComputeMetrics:
    """Tests for compute_metrics."""

    def test_perfect(self):
        report = compute_metrics([["A", "B"], ["B"]], [["A", "B"], ["B"]])
        assert report.accuracy == 1.0
        assert report.sequence_accuracy == 1.0
        assert report.macro_f1 == 1.0

    def test_all_wrong(self):
        report = compute_metrics([["B"], ["A"]], [["A"], ["B"]])
        assert report.accuracy == 0.0
        assert report.n_correct == 0
        assert report.per_label["A"].f1 == 0.0

    def test_seven_of_ten(self):
        gold = [["A"] * 5 + ["B"] * 5]
        pred = [["A"] * 5 + ["B"] * 2 + ["A"] * 3]
        report = compute_metrics(pred, gold)
        assert report.accuracy == pytest.approx(0.7)
        assert (report.n_correct, report.n_tokens, report.n_sequences) == (7, 10, 1)
        assert report.sequence_accuracy == 0.0
        assert report.confusion == [[5, 0], [3, 2]]
        assert report.per_label["A"].precision == pytest.approx(5 / 8)
        assert report.per_label["B"].recall == pytest.approx(0.4)

    def test_documents(self):
        report = compute_metrics([["pos"], ["neg"], ["pos"]], [["pos"], ["pos"], ["pos"]])
        assert report.accuracy == pytest.approx(2 / 3)
        assert report.labels == ["pos", "neg"]
        assert report.per_label["neg"].support == 0

    def test_explicit_label_order(self):
        report = compute_metrics([["b"]], [["b"]], labels=["a", "b"])
        assert report.confusion == [[0, 0], [0, 1]]

    def test_to_dict(self):
        data = compute_metrics([["A"]], [["A"]]).to_dict()
        assert data["accuracy"] == 1.0
        assert data["per_label"]["A"]["support"] == 1


class TestAlignment:
    """Tests for alignment checks."""

    def test_token_count(self):
        with pytest.raises(AlignmentMismatchError) as excinfo:
            check_alignment([["A"], ["A", "B"]], [["A"], ["A"]])
        assert (excinfo.value.sequence, excinfo.value.token) == (2, 2)

    def test_sequence_count(self):
        with pytest.raises(AlignmentMismatchError, match="sequence 2") as excinfo:
            compute_metrics([["A"]], [["A"], ["B"]])
        assert excinfo.value.token is None

    def test_index_accuracy(self):
        assert accuracy(np.array([0, 1, 1, 0]), np.array([0, 1, 0, 0])) == 0.75
        with pytest.raises(AlignmentMismatchError):
            accuracy(np.zeros(2), np.zeros(3))
