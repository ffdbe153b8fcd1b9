"""Brute-force enumeration oracle.

Enumerates every label assignment, evaluates the exact joint and
normalizes. Exponential in T and only meant as ground truth for tests and
the verification harness.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence

import numpy as np

from gendisc.core.joint import (
    as_symbols,
    class_log_likelihood,
    joint_log_prob,
    sequence_log_joint,
)
from gendisc.core.models import GenerativeModel, require_valid
from gendisc.core.types import DecodeResult, LabeledSequence, PosteriorMarginals
from gendisc.exceptions import OracleLimitError, ShapeError, ZeroProbabilityError

logger = logging.getLogger(__name__)

MAX_ASSIGNMENTS = 10**7
_CHUNK = 2**16


def _require_enumerable(model: GenerativeModel, length: int) -> None:
    """Raise OracleLimitError before anything of size N^T is allocated."""
    if not model.kind.is_sequence:
        return
    n = model.n_labels
    total = n**length
    if total > MAX_ASSIGNMENTS:
        raise OracleLimitError(
            f"{n}^{length} = {total} label paths exceed the {MAX_ASSIGNMENTS} limit"
        )


def _log_joint_chunks(
    model: GenerativeModel, y: np.ndarray
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (assignments (k, L), log joint (k,)) over every label assignment."""
    if not model.kind.is_sequence:
        classes = np.arange(model.n_labels)
        yield classes[:, None], model.log("prior") + class_log_likelihood(model, y)
        return
    T, n = y.size, model.n_labels
    total = n**T
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        paths = np.stack(np.unravel_index(flat, (n,) * T), axis=1)
        yield paths, sequence_log_joint(model, paths, y)


def brute_force_posterior(
    model: GenerativeModel,
    y: np.ndarray | LabeledSequence,
    positions: Sequence[int] | None = None,
) -> np.ndarray:
    """Exact p(x_H | y_{1:T}) by enumeration.

    Args:
        model: Generative model of any kind
        y: Observation indices
        positions: 0-based label positions H for the HMC family (default: all).
            Ignored for the Naive Bayes family, whose only label is the class

    Returns:
        Probabilities of shape (N,) * |H|, axis k for position ``positions[k]``

    Raises:
        OracleLimitError: N^T exceeds 10^7

    """
    require_valid(model, source="oracle")
    y = as_symbols(model, y)
    _require_enumerable(model, y.size)
    if model.kind.is_sequence:
        H = tuple(range(y.size)) if positions is None else tuple(int(p) for p in positions)
        if not H or min(H) < 0 or max(H) >= y.size:
            raise ShapeError(f"positions {H} outside 0..{y.size - 1}")
    else:
        H = (0,)
    shape = (model.n_labels,) * len(H)

    # Accumulate exp(lp - running max) per key, rescaling when the max grows.
    sums = np.zeros(int(np.prod(shape)))
    offset = -np.inf
    for paths, lp in _log_joint_chunks(model, y):
        top = lp.max()
        if not np.isfinite(top):
            continue
        if top > offset:
            if np.isfinite(offset):
                sums *= np.exp(offset - top)
            offset = top
        keys = np.ravel_multi_index(tuple(paths[:, h] for h in H), shape)
        np.add.at(sums, keys, np.exp(lp - offset))
    if not np.isfinite(offset):
        raise ZeroProbabilityError(1)
    return (sums / sums.sum()).reshape(shape)


def brute_force_marginals(
    model: GenerativeModel, y: np.ndarray | LabeledSequence
) -> PosteriorMarginals:
    """Per-position p(x_t | y_{1:T}) for the HMC family by enumeration."""
    if not model.kind.is_sequence:
        raise ShapeError("per-position marginals are defined for the HMC family")
    y = as_symbols(model, y)
    probs = np.stack([brute_force_posterior(model, y, [t]) for t in range(y.size)])
    return PosteriorMarginals(probs)


def brute_force_map(model: GenerativeModel, y: np.ndarray | LabeledSequence) -> DecodeResult:
    """Jointly most probable assignment by enumeration.

    Assignments are visited in lexicographic order and the first maximizer
    wins; ``score`` is its log joint probability.
    """
    require_valid(model, source="oracle")
    y = as_symbols(model, y)
    _require_enumerable(model, y.size)
    best_path: np.ndarray | None = None
    best = -np.inf
    for paths, lp in _log_joint_chunks(model, y):
        k = int(np.argmax(lp))
        if lp[k] > best:
            best, best_path = float(lp[k]), paths[k]
    if best_path is None:
        raise ZeroProbabilityError(1)
    logger.debug(f"brute_force_map: best log joint {best:.6g}")
    return DecodeResult(labels=best_path, score=best)



def attains_map(
    model: GenerativeModel,
    y: np.ndarray | LabeledSequence,
    labels: np.ndarray,
    best: DecodeResult | None = None,
    tol: float = 1e-9,
) -> bool:
    """True if ``labels`` reaches the brute-force maximum log joint within ``tol``.

    Under exact ties several assignments are optimal: enumeration keeps the
    lexicographically first, max-sum keeps the lowest back-pointer per step.

    Args:
        model: Generative model of any kind
        y: Observation indices
        labels: Candidate assignment (the class for the NB family)
        best: Result of ``brute_force_map`` for ``y``, computed if omitted
        tol: Absolute tolerance on the log joint

    """
    y = as_symbols(model, y)
    best = best or brute_force_map(model, y)
    labels = np.asarray(labels, dtype=np.int64)
    if np.array_equal(labels, best.labels):
        return True
    score = joint_log_prob(model, LabeledSequence(y=y, x=labels))
    return bool(best.score - score <= tol)
