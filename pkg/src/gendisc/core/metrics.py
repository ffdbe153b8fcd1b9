"""Classification and tagging metrics.

Computes token accuracy, exact-sequence accuracy and per-label
precision/recall/F1 from predicted and gold label sequences.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from gendisc.exceptions import AlignmentMismatchError

logger = logging.getLogger(__name__)


@dataclass
class LabelStats:
    """Confusion-derived statistics of one label."""

    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


@dataclass
class MetricsReport:
    """Evaluation of predicted labels against gold labels.

    Attributes:
        accuracy: correct / total over all tokens (one token per document
            for the Naive Bayes family)
        n_correct: Number of correctly labeled tokens
        n_tokens: Number of labeled tokens
        n_sequences: Number of sequences (documents)
        sequence_accuracy: Fraction of sequences with every label correct
        labels: Label names, in confusion-matrix order
        confusion: Counts, rows gold and columns predicted
        per_label: Precision, recall, F1 and support per label

    """

    accuracy: float
    n_correct: int
    n_tokens: int
    n_sequences: int
    sequence_accuracy: float
    labels: list[str] = field(default_factory=list)
    confusion: list[list[int]] = field(default_factory=list)
    per_label: dict[str, LabelStats] = field(default_factory=dict)

    @property
    def macro_f1(self) -> float:
        """Unweighted mean F1 over labels with gold support."""
        scores = [s.f1 for s in self.per_label.values() if s.support > 0]
        return float(np.mean(scores)) if scores else float("nan")

    def to_dict(self) -> dict[str, Any]:
        """Convert the report to a JSON-ready dictionary."""
        return {
            "accuracy": self.accuracy,
            "n_correct": self.n_correct,
            "n_tokens": self.n_tokens,
            "n_sequences": self.n_sequences,
            "sequence_accuracy": self.sequence_accuracy,
            "macro_f1": self.macro_f1,
            "per_label": {k: v.to_dict() for k, v in self.per_label.items()},
            "labels": self.labels,
            "confusion": self.confusion,
        }

    def __repr__(self) -> str:
        """Return string representation of MetricsReport."""
        return (
            f"MetricsReport(acc={self.accuracy:.4f}, tokens={self.n_tokens}, "
            f"sequences={self.n_sequences})"
        )


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den > 0 else 0.0


def check_alignment(predicted: Sequence[Sequence[Any]], gold: Sequence[Sequence[Any]]) -> None:
    """Raise AlignmentMismatchError at the first length or sequence-count mismatch."""
    for i, (p, g) in enumerate(zip(predicted, gold)):
        if len(p) != len(g):
            token = min(len(p), len(g)) + 1
            raise AlignmentMismatchError(
                i + 1, token, f"predicted has {len(p)} tokens, gold has {len(g)}"
            )
    if len(predicted) != len(gold):
        n = min(len(predicted), len(gold)) + 1
        raise AlignmentMismatchError(
            n, None, f"predicted has {len(predicted)} sequences, gold has {len(gold)}"
        )


def compute_metrics(
    predicted: Sequence[Sequence[str]],
    gold: Sequence[Sequence[str]],
    labels: Sequence[str] | None = None,
) -> MetricsReport:
    """Compare predicted and gold label sequences.

    Args:
        predicted: Predicted label names per sequence
        gold: Gold label names per sequence, same shape as ``predicted``
        labels: Label order for the report (default: gold labels then
            predicted-only labels, in first-seen order)

    Returns:
        MetricsReport with exact counting metrics

    Raises:
        AlignmentMismatchError: Sequence or token counts differ

    Example:
        >>> report = compute_metrics([["a", "b"]], [["a", "a"]])
        >>> report.accuracy
        0.5

    """
    check_alignment(predicted, gold)
    if labels is None:
        order: dict[str, None] = {}
        for seq in list(gold) + list(predicted):
            for name in seq:
                order.setdefault(str(name), None)
        labels = list(order)
    labels = [str(name) for name in labels]
    index = {name: i for i, name in enumerate(labels)}

    flat_gold = [index[str(n)] for seq in gold for n in seq]
    flat_pred = [index[str(n)] for seq in predicted for n in seq]
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(confusion, (flat_gold, flat_pred), 1)

    n_tokens = len(flat_gold)
    n_correct = int(np.trace(confusion))
    exact = sum(1 for p, g in zip(predicted, gold) if [str(n) for n in p] == [str(n) for n in g])

    per_label = {}
    for i, name in enumerate(labels):
        tp = int(confusion[i, i])
        precision = _ratio(tp, confusion[:, i].sum())
        recall = _ratio(tp, confusion[i].sum())
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_label[name] = LabelStats(precision, recall, f1, int(confusion[i].sum()))

    report = MetricsReport(
        accuracy=_ratio(n_correct, n_tokens),
        n_correct=n_correct,
        n_tokens=n_tokens,
        n_sequences=len(gold),
        sequence_accuracy=_ratio(exact, len(gold)),
        labels=labels,
        confusion=confusion.tolist(),
        per_label=per_label,
    )
    logger.info(f"Evaluated {n_tokens} tokens in {len(gold)} sequences: acc={report.accuracy:.4f}")
    return report


def accuracy(predicted: np.ndarray, gold: np.ndarray) -> float:
    """Fraction of equal entries of two index arrays."""
    predicted, gold = np.asarray(predicted), np.asarray(gold)
    if predicted.shape != gold.shape:
        raise AlignmentMismatchError(1, 1, f"shapes {predicted.shape} and {gold.shape} differ")
    return float(np.mean(predicted == gold)) if gold.size else 0.0
