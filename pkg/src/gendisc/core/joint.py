"""Joint probabilities, positional marginals and the kappa factor.

Everything is computed in natural-log space; ``-inf`` stands for a zero
probability and propagates through sums.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from gendisc.core.models import GenerativeModel, safe_log
from gendisc.core.types import LabeledSequence, ModelKind
from gendisc.exceptions import AlphabetError, ShapeError

logger = logging.getLogger(__name__)


class KappaResult(NamedTuple):
    """log kappa(y) = -sum_t log p(y_t | A_y^t).

    ``log_kappa`` is +inf and ``zero_probability`` True when some factor is 0.
    """

    log_kappa: float
    zero_probability: bool


def as_symbols(model: GenerativeModel, y: np.ndarray | LabeledSequence) -> np.ndarray:
    """Validate discrete observations against ``model`` and return them as int64."""
    if isinstance(y, LabeledSequence):
        y = y.y
    y = np.asarray(y)
    if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
        raise ShapeError("generative models need a 1-D array of observation indices")
    if y.size == 0:
        raise ShapeError("a sequence needs at least one observation")
    if y.min() < 0 or y.max() >= model.n_symbols:
        raise AlphabetError(f"observation index outside 0..{model.n_symbols - 1}")
    return y.astype(np.int64)


# ---------------------------------------------------------------------------
# Positional marginals (chain propagation of time-homogeneous tables)
# ---------------------------------------------------------------------------


def chain_marginals(
    prior: np.ndarray,
    transition: np.ndarray,
    length: int,
    transition2: np.ndarray | None = None,
) -> np.ndarray:
    """Propagate p(x_1) through the label chain, shape (length, N).

    With ``transition2`` the chain is second order and ``transition`` is
    only used for the first step.
    """
    out = np.empty((length, prior.shape[0]))
    out[0] = prior
    if transition2 is not None:
        if length > 1:
            out[1:] = pair_chain_marginals(prior, transition, transition2, length).sum(axis=1)
        return out
    for t in range(1, length):
        out[t] = out[t - 1] @ transition
    return out


def pair_chain_marginals(
    prior: np.ndarray, transition: np.ndarray, transition2: np.ndarray, length: int
) -> np.ndarray:
    """p(x_t, x_{t+1}) for t = 1..length-1 of a second-order chain, shape (length-1, N, N)."""
    n = prior.shape[0]
    out = np.empty((max(length - 1, 0), n, n))
    if length > 1:
        out[0] = prior[:, None] * transition
    for k in range(1, length - 1):
        out[k] = np.einsum("ab,abc->bc", out[k - 1], transition2)
    return out


def label_marginals(model: GenerativeModel, length: int) -> np.ndarray:
    """p(x_t) for t = 1..length, shape (length, N), for the HMC family."""
    if not model.kind.is_sequence:
        raise ShapeError(f"label marginals are defined for the HMC family, not {model.kind.value}")
    transition2 = model.table("transition2") if model.kind is ModelKind.HMC2 else None
    return chain_marginals(model.table("prior"), model.table("transition"), length, transition2)


def observation_marginals(model: GenerativeModel, length: int) -> np.ndarray:
    """Per-class law of one observation (Pooled MC) or two consecutive ones (Pooled MC2).

    Returns shape (length, N, M) for Pooled MC, row c holding p(y_{c+1} | x);
    shape (length, N, M, M) for Pooled MC2, row c holding p(y_{c+1}, y_{c+2} | x).
    """
    first = model.table("first_emission")
    if model.kind is ModelKind.POOLED_MC:
        step = model.table("emission_transition")
        out = np.empty((length,) + first.shape)
        out[0] = first
        for c in range(1, length):
            out[c] = np.einsum("xa,xab->xb", out[c - 1], step)
        return out
    if model.kind is ModelKind.POOLED_MC2:
        step = model.table("emission_transition2")
        out = np.empty((length,) + model.table("second_emission").shape)
        out[0] = first[:, :, None] * model.table("second_emission")
        for c in range(1, length):
            out[c] = np.einsum("xab,xabc->xbc", out[c - 1], step)
        return out
    raise ShapeError(f"observation marginals are defined for pooled kinds, not {model.kind.value}")


# ---------------------------------------------------------------------------
# Joint law
# ---------------------------------------------------------------------------


def class_log_likelihood(model: GenerativeModel, y: np.ndarray) -> np.ndarray:
    """log p(y_{1:T} | x) for every class x, shape (N,), NB family only."""
    y = as_symbols(model, y)
    kind = model.kind
    if kind is ModelKind.NB:
        return model.log("emission")[:, y].sum(axis=1)
    if kind is ModelKind.POOLED_MC:
        ll = model.log("first_emission")[:, y[0]].copy()
        if y.size > 1:
            ll += model.log("emission_transition")[:, y[:-1], y[1:]].sum(axis=1)
        return ll
    if kind is ModelKind.POOLED_MC2:
        ll = model.log("first_emission")[:, y[0]].copy()
        if y.size > 1:
            ll += model.log("second_emission")[:, y[0], y[1]]
        if y.size > 2:
            ll += model.log("emission_transition2")[:, y[:-2], y[1:-1], y[2:]].sum(axis=1)
        return ll
    raise ShapeError(f"class likelihoods are defined for the NB family, not {kind.value}")


def sequence_log_joint(model: GenerativeModel, paths: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log p(x_{1:T}, y_{1:T}) for a batch of label paths, shape (n,), HMC family.

    Args:
        model: HMC, HMC2 or HMC+ model
        paths: Label index paths, shape (n, T)
        y: Observation indices, shape (T,)

    """
    y = as_symbols(model, y)
    paths = np.atleast_2d(np.asarray(paths, dtype=np.int64))
    if paths.shape[1] != y.size:
        raise ShapeError(f"label paths of length {paths.shape[1]} for T={y.size}")
    first, prev, nxt = paths[:, 0], paths[:, :-1], paths[:, 1:]
    lp = model.log("prior")[first]
    kind = model.kind
    if kind is ModelKind.HMC:
        lp = lp + model.log("transition")[prev, nxt].sum(axis=1)
        lp = lp + model.log("emission")[paths, y[None, :]].sum(axis=1)
    elif kind is ModelKind.HMC2:
        lp = lp + model.log("emission")[paths, y[None, :]].sum(axis=1)
        if y.size > 1:
            lp = lp + model.log("transition")[paths[:, 0], paths[:, 1]]
        if y.size > 2:
            lp = lp + model.log("transition2")[paths[:, :-2], paths[:, 1:-1], paths[:, 2:]].sum(
                axis=1
            )
    elif kind is ModelKind.HMC_PLUS:
        lp = lp + model.log("transition")[prev, nxt].sum(axis=1)
        lp = lp + model.log("first_emission")[first, y[0]]
        lp = lp + model.log("pair_emission")[prev, nxt, y[None, 1:]].sum(axis=1)
    else:
        raise ShapeError(f"sequence joints are defined for the HMC family, not {kind.value}")
    return lp


def joint_log_prob(model: GenerativeModel, seq: LabeledSequence) -> float:
    """Natural log of p(x, y_{1:T}) under ``model``; -inf when a factor is 0."""
    if seq.x is None:
        raise ShapeError("joint_log_prob needs a labeled sequence")
    seq.check(model.kind, model.n_labels, model.n_symbols)
    if model.kind.is_sequence:
        return float(sequence_log_joint(model, seq.x[None, :], seq.y)[0])
    x = int(seq.x[0])
    return float(model.log("prior")[x] + class_log_likelihood(model, seq.y)[x])


# ---------------------------------------------------------------------------
# Kappa
# ---------------------------------------------------------------------------


def observation_log_conditionals(model: GenerativeModel, y: np.ndarray) -> np.ndarray:
    """log p(y_t | A_y^t) for every position, shape (T,).

    A_y^t is empty for NB and the HMC family, {y_{t-1}} for Pooled MC and
    {y_{t-2}, y_{t-1}} for Pooled MC2 (truncated at the sequence start).
    """
    y = as_symbols(model, y)
    T = y.size
    prior = model.table("prior")
    kind = model.kind
    out = np.empty(T)

    if kind is ModelKind.NB:
        out[:] = safe_log(prior @ model.table("emission"))[y]
    elif kind in (ModelKind.POOLED_MC, ModelKind.POOLED_MC2):
        first = model.table("first_emission")
        out[0] = safe_log(prior @ first[:, y[0]])
        if kind is ModelKind.POOLED_MC:
            step = model.table("emission_transition")
            context = observation_marginals(model, max(T - 1, 1))
            for t in range(1, T):
                weight = prior * context[t - 1][:, y[t - 1]]
                out[t] = safe_log(weight @ step[:, y[t - 1], y[t]]) - safe_log(weight.sum())
        else:
            if T > 1:
                weight = prior * first[:, y[0]]
                second = model.table("second_emission")[:, y[0], y[1]]
                out[1] = safe_log(weight @ second) - safe_log(weight.sum())
            step = model.table("emission_transition2")
            context = observation_marginals(model, max(T - 2, 1))
            for t in range(2, T):
                weight = prior * context[t - 2][:, y[t - 2], y[t - 1]]
                num = weight @ step[:, y[t - 2], y[t - 1], y[t]]
                out[t] = safe_log(num) - safe_log(weight.sum())
    elif kind in (ModelKind.HMC, ModelKind.HMC2):
        marginals = label_marginals(model, T)
        emission = model.table("emission")
        out[:] = safe_log(np.einsum("tx,xt->t", marginals, emission[:, y]))
    else:
        marginals = label_marginals(model, T)
        out[0] = safe_log(prior @ model.table("first_emission")[:, y[0]])
        pair_emission = model.table("pair_emission")
        transition = model.table("transition")
        for t in range(1, T):
            pair = marginals[t - 1][:, None] * transition
            out[t] = safe_log((pair * pair_emission[:, :, y[t]]).sum())
    return out


def kappa_log(model: GenerativeModel, y: np.ndarray | LabeledSequence) -> KappaResult:
    """log kappa(y), the x-independent factor linking joint and discriminative products."""
    terms = observation_log_conditionals(model, as_symbols(model, y))
    if np.isneginf(terms).any():
        position = int(np.flatnonzero(np.isneginf(terms))[0]) + 1
        logger.warning(f"kappa: p(y_t | A_y^t) = 0 at position {position}")
        return KappaResult(float("inf"), True)
    return KappaResult(float(-terms.sum()), False)
